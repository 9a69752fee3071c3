//! Problem representation: dimensions, derivative callbacks and iterates.
//!
//! A problem supplies analytic first and second derivatives through the
//! [`MinmaxProblem`] trait. Hessian and Jacobian blocks are emitted as
//! triplets so sparse problems stay sparse; minimization is simply the
//! `n_y = 0` degeneration and unconstrained problems leave the constraint
//! callbacks at their empty defaults.

pub mod fd_check;
pub mod kkt;

use crate::factorization::Inertia;
use crate::scalar::Scalar;

/// Variable and constraint counts.
///
/// `n_*` are variable counts, `l_*` equality-constraint counts, `m_*`
/// inequality-constraint counts; the `x` side minimizes, the `y` side
/// maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Dims {
    pub n_x: usize,
    pub n_y: usize,
    pub l_x: usize,
    pub l_y: usize,
    pub m_x: usize,
    pub m_y: usize,
}

impl Dims {
    pub fn unconstrained(n_x: usize, n_y: usize) -> Self {
        Dims { n_x, n_y, ..Default::default() }
    }

    pub fn validate(&self) {
        if self.n_y == 0 {
            assert!(
                self.l_y == 0 && self.m_y == 0,
                "constraints on an empty maximizer block"
            );
        }
    }

    pub fn is_unconstrained(&self) -> bool {
        self.l_x + self.m_x + self.l_y + self.m_y == 0
    }

    pub fn is_minimization(&self) -> bool {
        self.n_y == 0 && self.l_y == 0 && self.m_y == 0
    }

    /// Length of the full primal-dual iterate z.
    pub fn z_dim(&self) -> usize {
        self.n_x + self.n_y + self.l_x + self.l_y + 2 * (self.m_x + self.m_y)
    }

    /// Length of the maximizer subsystem (y, s_y, nu_y, lambda_y).
    pub fn y_dim(&self) -> usize {
        self.n_y + self.l_y + 2 * self.m_y
    }

    /// Required inertia of the modified full system.
    pub fn zz_target(&self) -> Inertia {
        Inertia::new(
            self.n_x + self.m_x + self.l_y + self.m_y,
            self.l_x + self.m_x + self.n_y + self.m_y,
            0,
        )
    }

    /// Required inertia of the modified maximizer subsystem.
    pub fn yy_target(&self) -> Inertia {
        Inertia::new(self.l_y + self.m_y, self.n_y + self.m_y, 0)
    }
}

/// Offsets of the z blocks in the fixed order
/// (x, s_x, y, s_y, nu_y, lambda_y, nu_x, lambda_x).
#[derive(Debug, Clone, Copy)]
pub struct ZLayout {
    pub dims: Dims,
    pub x: usize,
    pub s_x: usize,
    pub y: usize,
    pub s_y: usize,
    pub nu_y: usize,
    pub lam_y: usize,
    pub nu_x: usize,
    pub lam_x: usize,
    pub total: usize,
}

impl ZLayout {
    pub fn new(dims: Dims) -> Self {
        let x = 0;
        let s_x = x + dims.n_x;
        let y = s_x + dims.m_x;
        let s_y = y + dims.n_y;
        let nu_y = s_y + dims.m_y;
        let lam_y = nu_y + dims.l_y;
        let nu_x = lam_y + dims.m_y;
        let lam_x = nu_x + dims.l_x;
        let total = lam_x + dims.m_x;
        debug_assert_eq!(total, dims.z_dim());
        ZLayout { dims, x, s_x, y, s_y, nu_y, lam_y, nu_x, lam_x, total }
    }

    /// Offsets within the maximizer subsystem (y, s_y, nu_y, lambda_y).
    pub fn y_sub(&self) -> (usize, usize, usize, usize) {
        let d = &self.dims;
        (0, d.n_y, d.n_y + d.m_y, d.n_y + d.m_y + d.l_y)
    }
}

/// Triplet accumulator for Hessian and Jacobian blocks.
#[derive(Debug, Default, Clone)]
pub struct TripletSink<T> {
    entries: Vec<(usize, usize, T)>,
}

impl<T: Scalar> TripletSink<T> {
    pub fn new() -> Self {
        TripletSink { entries: Vec::new() }
    }

    #[inline]
    pub fn push(&mut self, i: usize, j: usize, v: T) {
        self.entries.push((i, j, v));
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn entries(&self) -> &[(usize, usize, T)] {
        &self.entries
    }

    pub fn all_finite(&self) -> bool {
        self.entries.iter().all(|&(_, _, v)| v.is_finite())
    }
}

/// Multiplier views used when weighting constraint curvature into the
/// Lagrangian Hessian blocks.
#[derive(Debug, Clone, Copy)]
pub struct Multipliers<'a, T> {
    pub nu_x: &'a [T],
    pub lam_x: &'a [T],
    pub nu_y: &'a [T],
    pub lam_y: &'a [T],
}

impl<'a, T: Scalar> Multipliers<'a, T> {
    pub fn empty() -> Multipliers<'static, T> {
        Multipliers { nu_x: &[], lam_x: &[], nu_y: &[], lam_y: &[] }
    }
}

/// A minmax problem with analytic derivatives.
///
/// Callbacks must be pure; instances are shared across threads. Jacobian
/// triplets are pushed as `(variable index, constraint index, value)`.
/// Symmetric Hessian blocks push the lower triangle only (`i >= j`); the
/// cross block `xy` pushes `(x index, y index, value)` densely where nonzero.
///
/// Sign conventions follow the stacked Lagrangian
/// `L = f + nu_x' G_x + lambda_x' (F_x + s_x) + nu_y' G_y - lambda_y' (F_y + s_y)`,
/// so the `lag_hess_*` blocks subtract `lambda_y`-weighted curvature of `F_y`.
pub trait MinmaxProblem<T: Scalar>: Send + Sync {
    fn dims(&self) -> Dims;

    fn name(&self) -> &str {
        "problem"
    }

    fn objective(&self, x: &[T], y: &[T]) -> T;
    fn grad_x(&self, x: &[T], y: &[T], g: &mut [T]);
    fn grad_y(&self, x: &[T], y: &[T], g: &mut [T]);

    fn eq_x(&self, _x: &[T], _out: &mut [T]) {}
    fn ineq_x(&self, _x: &[T], _out: &mut [T]) {}
    fn eq_y(&self, _x: &[T], _y: &[T], _out: &mut [T]) {}
    fn ineq_y(&self, _x: &[T], _y: &[T], _out: &mut [T]) {}

    fn jac_eq_x(&self, _x: &[T], _sink: &mut TripletSink<T>) {}
    fn jac_ineq_x(&self, _x: &[T], _sink: &mut TripletSink<T>) {}
    /// Jacobians of G_y with respect to x and to y.
    fn jac_eq_y(
        &self,
        _x: &[T],
        _y: &[T],
        _sink_x: &mut TripletSink<T>,
        _sink_y: &mut TripletSink<T>,
    ) {
    }
    /// Jacobians of F_y with respect to x and to y.
    fn jac_ineq_y(
        &self,
        _x: &[T],
        _y: &[T],
        _sink_x: &mut TripletSink<T>,
        _sink_y: &mut TripletSink<T>,
    ) {
    }

    fn lag_hess_xx(&self, x: &[T], y: &[T], m: &Multipliers<'_, T>, sink: &mut TripletSink<T>);
    fn lag_hess_xy(&self, _x: &[T], _y: &[T], _m: &Multipliers<'_, T>, _sink: &mut TripletSink<T>) {
    }
    fn lag_hess_yy(&self, _x: &[T], _y: &[T], _m: &Multipliers<'_, T>, _sink: &mut TripletSink<T>) {
    }
}

/// Full primal-dual iterate in the fixed block order.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualPoint<T> {
    pub x: Vec<T>,
    pub s_x: Vec<T>,
    pub y: Vec<T>,
    pub s_y: Vec<T>,
    pub nu_y: Vec<T>,
    pub lam_y: Vec<T>,
    pub nu_x: Vec<T>,
    pub lam_x: Vec<T>,
}

impl<T: Scalar> PrimalDualPoint<T> {
    pub fn zeros(dims: Dims) -> Self {
        PrimalDualPoint {
            x: vec![T::zero(); dims.n_x],
            s_x: vec![T::zero(); dims.m_x],
            y: vec![T::zero(); dims.n_y],
            s_y: vec![T::zero(); dims.m_y],
            nu_y: vec![T::zero(); dims.l_y],
            lam_y: vec![T::zero(); dims.m_y],
            nu_x: vec![T::zero(); dims.l_x],
            lam_x: vec![T::zero(); dims.m_x],
        }
    }

    /// Cold start: primal values as given, slacks `max(-F, 1)`, inequality
    /// multipliers one, equality multipliers zero.
    pub fn cold_start(p: &dyn MinmaxProblem<T>, x0: &[T], y0: &[T]) -> Self {
        let dims = p.dims();
        assert_eq!(x0.len(), dims.n_x);
        assert_eq!(y0.len(), dims.n_y);
        let mut z = Self::zeros(dims);
        z.x.copy_from_slice(x0);
        z.y.copy_from_slice(y0);
        let mut fx = vec![T::zero(); dims.m_x];
        p.ineq_x(x0, &mut fx);
        for (s, &f) in z.s_x.iter_mut().zip(&fx) {
            *s = (-f).max(T::one());
        }
        let mut fy = vec![T::zero(); dims.m_y];
        p.ineq_y(x0, y0, &mut fy);
        for (s, &f) in z.s_y.iter_mut().zip(&fy) {
            *s = (-f).max(T::one());
        }
        z.lam_x.iter_mut().for_each(|v| *v = T::one());
        z.lam_y.iter_mut().for_each(|v| *v = T::one());
        z
    }

    pub fn dims_of(&self) -> Dims {
        Dims {
            n_x: self.x.len(),
            n_y: self.y.len(),
            l_x: self.nu_x.len(),
            l_y: self.nu_y.len(),
            m_x: self.s_x.len(),
            m_y: self.s_y.len(),
        }
    }

    pub fn multipliers(&self) -> Multipliers<'_, T> {
        Multipliers {
            nu_x: &self.nu_x,
            lam_x: &self.lam_x,
            nu_y: &self.nu_y,
            lam_y: &self.lam_y,
        }
    }

    /// Flattens into the fixed block order.
    pub fn to_vec(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(self.dims_of().z_dim());
        v.extend_from_slice(&self.x);
        v.extend_from_slice(&self.s_x);
        v.extend_from_slice(&self.y);
        v.extend_from_slice(&self.s_y);
        v.extend_from_slice(&self.nu_y);
        v.extend_from_slice(&self.lam_y);
        v.extend_from_slice(&self.nu_x);
        v.extend_from_slice(&self.lam_x);
        v
    }

    pub fn from_vec(dims: Dims, v: &[T]) -> Self {
        let l = ZLayout::new(dims);
        assert_eq!(v.len(), l.total);
        PrimalDualPoint {
            x: v[l.x..l.x + dims.n_x].to_vec(),
            s_x: v[l.s_x..l.s_x + dims.m_x].to_vec(),
            y: v[l.y..l.y + dims.n_y].to_vec(),
            s_y: v[l.s_y..l.s_y + dims.m_y].to_vec(),
            nu_y: v[l.nu_y..l.nu_y + dims.l_y].to_vec(),
            lam_y: v[l.lam_y..l.lam_y + dims.m_y].to_vec(),
            nu_x: v[l.nu_x..l.nu_x + dims.l_x].to_vec(),
            lam_x: v[l.lam_x..l.lam_x + dims.m_x].to_vec(),
        }
    }

    /// z += alpha * d with d flat in the fixed block order.
    pub fn add_scaled(&mut self, d: &[T], alpha: T) {
        let dims = self.dims_of();
        let l = ZLayout::new(dims);
        let apply = |block: &mut [T], off: usize| {
            for (k, v) in block.iter_mut().enumerate() {
                *v += alpha * d[off + k];
            }
        };
        apply(&mut self.x, l.x);
        apply(&mut self.s_x, l.s_x);
        apply(&mut self.y, l.y);
        apply(&mut self.s_y, l.s_y);
        apply(&mut self.nu_y, l.nu_y);
        apply(&mut self.lam_y, l.lam_y);
        apply(&mut self.nu_x, l.nu_x);
        apply(&mut self.lam_x, l.lam_x);
    }

    /// Smallest value over the slack and inequality-multiplier blocks, or
    /// `+inf` when there are none.
    pub fn min_positive_blocks(&self) -> T {
        let mut m = T::infinity();
        for v in self.s_x.iter().chain(&self.s_y).chain(&self.lam_x).chain(&self.lam_y) {
            m = m.min(*v);
        }
        m
    }

    pub fn strictly_feasible(&self) -> bool {
        self.min_positive_blocks() > T::zero()
            || (self.s_x.is_empty()
                && self.s_y.is_empty()
                && self.lam_x.is_empty()
                && self.lam_y.is_empty())
    }

    pub fn all_finite(&self) -> bool {
        self.to_vec().iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod layout_tests {
    use super::*;

    #[test]
    fn layout_offsets_cover_z() {
        let dims = Dims { n_x: 3, n_y: 2, l_x: 1, l_y: 2, m_x: 2, m_y: 1 };
        let l = ZLayout::new(dims);
        assert_eq!(l.x, 0);
        assert_eq!(l.s_x, 3);
        assert_eq!(l.y, 5);
        assert_eq!(l.s_y, 7);
        assert_eq!(l.nu_y, 8);
        assert_eq!(l.lam_y, 10);
        assert_eq!(l.nu_x, 11);
        assert_eq!(l.lam_x, 12);
        assert_eq!(l.total, 14);
        assert_eq!(dims.z_dim(), 14);
        assert_eq!(dims.y_dim(), 6);
    }

    #[test]
    fn flat_round_trip() {
        let dims = Dims { n_x: 2, n_y: 1, l_x: 0, l_y: 1, m_x: 1, m_y: 1 };
        let mut z = PrimalDualPoint::<f64>::zeros(dims);
        z.x = vec![1.0, 2.0];
        z.s_x = vec![3.0];
        z.y = vec![4.0];
        z.s_y = vec![5.0];
        z.nu_y = vec![6.0];
        z.lam_y = vec![7.0];
        z.lam_x = vec![8.0];
        let v = z.to_vec();
        assert_eq!(v, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        assert_eq!(PrimalDualPoint::from_vec(dims, &v), z);
    }

    #[test]
    fn inertia_targets_match_block_counts() {
        let dims = Dims { n_x: 4, n_y: 3, l_x: 1, l_y: 2, m_x: 2, m_y: 1 };
        assert_eq!(dims.zz_target(), Inertia::new(4 + 2 + 2 + 1, 1 + 2 + 3 + 1, 0));
        assert_eq!(dims.yy_target(), Inertia::new(2 + 1, 3 + 1, 0));
    }
}
