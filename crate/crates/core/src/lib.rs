//! Solver toolkit for nonconvex-nonconcave minmax optimization.
//!
//! The crate provides a modified Newton method for unconstrained minmax
//! problems and a modified primal-dual interior-point method for constrained
//! ones. Both select diagonal Hessian modifications from matrix inertia so
//! that the iterations are attracted only to local minmax points and repelled
//! from every other equilibrium. Unconstrained and constrained minimization
//! are the `n_y = 0` degenerations of the same machinery.
//!
//! Everything is generic over the scalar type through [`scalar::Scalar`]
//! (`f32` or `f64`); the aliases below fix the common `f64` instantiations.

pub mod baselines;
pub mod bench;
pub mod chauffeur;
pub mod epsilon;
pub mod factorization;
pub mod interior_point;
pub mod linalg;
pub mod newton;
pub mod problem;
pub mod scalar;

pub use scalar::Scalar;

/// Common `f64` instantiations.
pub type SymMatrix64 = factorization::SymMatrix<f64>;
pub type LdltFactors64 = factorization::LdltFactors<f64>;
pub type GammaPolicy64 = factorization::GammaPolicy<f64>;
pub type PrimalDualPoint64 = problem::PrimalDualPoint<f64>;
pub type KktSystem64 = problem::kkt::KktSystem<f64>;
pub type Modification64 = problem::kkt::Modification<f64>;
