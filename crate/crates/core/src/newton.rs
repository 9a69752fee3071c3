//! Modified Newton solver for unconstrained minmax (and minimization as its
//! `n_y = 0` degeneration).
//!
//! Each iteration assembles the Hessian system, re-selects the diagonal
//! modification while the gradient is large, freezes it inside the
//! `delta_eps` neighborhood (resetting to zero when the unmodified
//! quadratic-approximation conditions hold, which preserves superlinear
//! convergence), and takes the full step
//! `(x, y) <- (x, y) - (H + E)^{-1} grad`. Termination classifies the final
//! point through the second-order inertia conditions.

use thiserror::Error;

use crate::epsilon::{dual_inertia, EpsilonError, EpsilonSelector, Selection, SelectorConfig};
use crate::factorization::{FactorError, Inertia, LdltEngine, LdltFactors, SymMatrix};
use crate::linalg::{sym_lambda_max, Mat};
use crate::problem::kkt::{
    assemble_scaled_kkt, e_diag, gamma_signs_zz, AssemblyError, KktAssembler, KktSystem,
    Modification,
};
use crate::problem::{Dims, MinmaxProblem, PrimalDualPoint};
use crate::scalar::{inf_norm, Scalar};

/// Termination status shared by the Newton-type drivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Converged and the second-order inertia conditions certify a local
    /// minmax (a local minimum in minimization mode).
    LocalMinmax,
    /// Converged to an equilibrium that fails the certification.
    EquilibriumNotMinmax,
    MaxIters,
    Diverged,
    SingularFailure,
    /// Interior-point only: the start violates feasibility requirements.
    InfeasibleStart,
}

impl SolveStatus {
    pub fn converged(self) -> bool {
        matches!(self, SolveStatus::LocalMinmax | SolveStatus::EquilibriumNotMinmax)
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::LocalMinmax => "local_minmax",
            SolveStatus::EquilibriumNotMinmax => "equilibrium_not_minmax",
            SolveStatus::MaxIters => "max_iters",
            SolveStatus::Diverged => "diverged",
            SolveStatus::SingularFailure => "singular_failure",
            SolveStatus::InfeasibleStart => "infeasible_start",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOptions<T> {
    /// Stopping tolerance on the gradient infinity norm.
    pub delta_s: T,
    /// Neighborhood radius below which the modification is frozen.
    pub delta_eps: T,
    pub max_iters: usize,
    pub eps_growth: T,
    pub mu_grid: Vec<T>,
    pub eps_cap_steps: usize,
    /// Toggle for the instability-enforcement branch of the selection.
    pub enforce_instability: bool,
    pub divergence_threshold: T,
    pub keep_trace: bool,
}

impl<T: Scalar> Default for NewtonOptions<T> {
    fn default() -> Self {
        let sel = SelectorConfig::<T>::default();
        NewtonOptions {
            delta_s: T::cast(1e-5),
            delta_eps: T::cast(1e-3),
            max_iters: 500,
            eps_growth: sel.eps_growth,
            mu_grid: sel.mu_grid,
            eps_cap_steps: sel.eps_cap_steps,
            enforce_instability: true,
            divergence_threshold: T::cast(1e8),
            keep_trace: false,
        }
    }
}

impl<T: Scalar> NewtonOptions<T> {
    pub fn validate(&self) {
        assert!(self.delta_s >= T::zero());
        assert!(self.delta_eps > self.delta_s, "delta_eps must exceed delta_s");
        assert!(self.eps_growth > T::one());
        assert!(self.mu_grid.iter().all(|&m| m > T::zero() && m < T::one()));
    }

    pub fn selector_config(&self) -> SelectorConfig<T> {
        SelectorConfig {
            eps_growth: self.eps_growth,
            eps_cap_steps: self.eps_cap_steps,
            mu_grid: self.mu_grid.clone(),
            enforce_instability: self.enforce_instability,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonTraceRow<T> {
    pub iter: usize,
    pub gnorm: T,
    pub eps_x: T,
    pub eps_y: T,
    pub step_norm: T,
}

#[derive(Debug, Clone)]
pub struct NewtonReport<T> {
    pub status: SolveStatus,
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub iters: usize,
    pub gnorm: T,
    /// Second-order certification was ambiguous at the regularization scale.
    pub singular_hessian: bool,
    /// Last modification in effect.
    pub eps: Modification<T>,
    pub trace: Option<Vec<NewtonTraceRow<T>>>,
    pub failure: Option<String>,
}

impl<T: Scalar> NewtonReport<T> {
    /// Converged-to-minmax in the benchmark-counting sense: certified, or
    /// converged with a singular second-order test (the bilinear saddle case).
    pub fn counts_as_minmax(&self) -> bool {
        self.status == SolveStatus::LocalMinmax
            || (self.status == SolveStatus::EquilibriumNotMinmax && self.singular_hessian)
    }
}

#[derive(Debug, Error)]
pub enum NewtonStepError {
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error("modified Hessian is singular")]
    SingularSystem,
}

/// Second-order classification of an equilibrium.
#[derive(Debug, Clone, Copy)]
pub struct Classification {
    pub local_minmax: bool,
    /// Inertia readings disagreed at the regularization scale.
    pub singular_hessian: bool,
    pub inertia_zz: Option<Inertia>,
    pub inertia_yy: Option<Inertia>,
}

/// Classifies an assembled system against the second-order inertia targets.
pub fn classify_kkt<T: Scalar>(k: &KktSystem<T>) -> Classification {
    let mut zz_engine = LdltEngine::new();
    let mut yy_engine = LdltEngine::new();
    let zz = dual_inertia(&mut zz_engine, &k.jzz, None, &crate::problem::kkt::gamma_signs_zz(k.dims));
    let yy = dual_inertia(&mut yy_engine, &k.jyy, None, &crate::problem::kkt::gamma_signs_yy(k.dims));
    match (zz.consistent(), yy.consistent()) {
        (Some(izz), Some(iyy)) => Classification {
            local_minmax: izz == k.dims.zz_target() && iyy == k.dims.yy_target(),
            singular_hessian: false,
            inertia_zz: Some(izz),
            inertia_yy: Some(iyy),
        },
        (izz, iyy) => Classification {
            local_minmax: false,
            singular_hessian: true,
            inertia_zz: izz,
            inertia_yy: iyy,
        },
    }
}

/// Classifies an unconstrained equilibrium through the Hessian inertia.
pub fn classify_equilibrium<T: Scalar>(
    p: &dyn MinmaxProblem<T>,
    x: &[T],
    y: &[T],
) -> Result<Classification, AssemblyError> {
    let z = PrimalDualPoint::cold_start(p, x, y);
    let k = assemble_scaled_kkt(p, &z, T::zero(), Modification::zero())?;
    Ok(classify_kkt(&k))
}

/// Selects the modification for a plain Hessian (unconstrained case).
pub fn select_epsilons_unconstrained<T: Scalar>(
    hzz: &SymMatrix<T>,
    dims: Dims,
    opts: &NewtonOptions<T>,
) -> Result<Selection<T>, EpsilonError> {
    assert!(dims.is_unconstrained());
    assert_eq!(hzz.dim(), dims.n_x + dims.n_y);
    let k = KktSystem {
        dims,
        g: Vec::new(),
        jyy: hzz.principal_range(dims.n_x, dims.n_x + dims.n_y),
        jzz: hzz.clone(),
        scaling: vec![T::one(); hzz.dim()],
        b: T::zero(),
        modification: Modification::zero(),
    };
    EpsilonSelector::new().select(&k, &opts.selector_config())
}

/// Factors `J + E (+ Gamma)` for the step solve, rejecting systems whose
/// inertia readings flag a genuine singularity. The regularization magnitude
/// escalates while the unpivoted elimination cannot resolve the pivots; the
/// subsequent iterative-refinement step removes the `Gamma` bias from the
/// solution.
pub(crate) fn factor_step_matrix<T: Scalar>(
    engine: &mut LdltEngine,
    jzz: &SymMatrix<T>,
    e: &[T],
    signs: &[i8],
) -> Result<LdltFactors<T>, NewtonStepError> {
    let reading = dual_inertia(engine, jzz, Some(e), signs);
    match reading.consistent() {
        Some(it) if it.zero == 0 => {}
        _ => return Err(NewtonStepError::SingularSystem),
    }
    let n = jzz.dim();
    let gamma0 = crate::epsilon::gamma_scale(jzz, None);
    for level in 0..4 {
        let gamma = gamma0 * T::cast(100.0).powi(level);
        let shift: Vec<T> = (0..n)
            .map(|i| e[i] + if signs[i] >= 0 { gamma } else { -gamma })
            .collect();
        if let Ok(f) = engine.factor_shifted(jzz, &shift, gamma) {
            if f.inertia().zero == 0 {
                return Ok(f);
            }
        }
    }
    Err(NewtonStepError::SingularSystem)
}

fn solve_step<T: Scalar>(
    engine: &mut LdltEngine,
    k: &KktSystem<T>,
    m: Modification<T>,
) -> Result<Vec<T>, NewtonStepError> {
    let e = e_diag(k.dims, m);
    let signs = gamma_signs_zz(k.dims);
    let factors = factor_step_matrix(engine, &k.jzz, &e, &signs)?;
    // direction solves (J + E) d = -S^{-1} g; refinement removes the Gamma bias
    let rhs: Vec<T> = k.g.iter().zip(&k.scaling).map(|(&g, &s)| -(g / s)).collect();
    factors
        .solve_refined(|x, y| k.jzz.matvec_shifted(x, y, Some(&e)), &rhs)
        .map_err(|e| match e {
            FactorError::SingularSystem { .. } | FactorError::FactorizationBreakdown { .. } => {
                NewtonStepError::SingularSystem
            }
        })
}

/// One modified Newton step `(x, y) - (H + E)^{-1} grad f`.
pub fn newton_step<T: Scalar>(
    p: &dyn MinmaxProblem<T>,
    x: &[T],
    y: &[T],
    m: Modification<T>,
) -> Result<(Vec<T>, Vec<T>), NewtonStepError> {
    let dims = p.dims();
    assert!(dims.is_unconstrained());
    let z = PrimalDualPoint::cold_start(p, x, y);
    let k = assemble_scaled_kkt(p, &z, T::zero(), m)?;
    let mut engine = LdltEngine::new();
    let d = solve_step(&mut engine, &k, m)?;
    let mut xn = x.to_vec();
    let mut yn = y.to_vec();
    for i in 0..dims.n_x {
        xn[i] += d[i];
    }
    for j in 0..dims.n_y {
        yn[j] += d[dims.n_x + j];
    }
    Ok((xn, yn))
}

/// Modified Newton driver with inertia-based modification selection.
pub fn solve<T: Scalar>(
    p: &dyn MinmaxProblem<T>,
    x0: &[T],
    y0: &[T],
    opts: &NewtonOptions<T>,
) -> NewtonReport<T> {
    opts.validate();
    let dims = p.dims();
    assert!(dims.is_unconstrained(), "newton solver requires an unconstrained problem");
    let mut x = x0.to_vec();
    let mut y = y0.to_vec();
    let mut asm = KktAssembler::new(dims);
    let mut selector = EpsilonSelector::new();
    let mut step_engine = LdltEngine::new();
    let cfg = opts.selector_config();
    let mut frozen: Option<Modification<T>> = None;
    let mut eps = Modification::zero();
    let mut trace = opts.keep_trace.then(Vec::new);
    let report = |status: SolveStatus,
                      x: Vec<T>,
                      y: Vec<T>,
                      iters: usize,
                      gnorm: T,
                      singular: bool,
                      eps: Modification<T>,
                      trace: Option<Vec<NewtonTraceRow<T>>>,
                      failure: Option<String>| NewtonReport {
        status,
        x,
        y,
        iters,
        gnorm,
        singular_hessian: singular,
        eps,
        trace,
        failure,
    };

    for iter in 0..=opts.max_iters {
        let z = PrimalDualPoint::cold_start(p, &x, &y);
        let k = match asm.scaled_kkt(p, &z, T::zero(), eps) {
            Ok(k) => k,
            Err(e) => {
                return report(
                    SolveStatus::SingularFailure,
                    x,
                    y,
                    iter,
                    T::infinity(),
                    false,
                    eps,
                    trace,
                    Some(e.to_string()),
                )
            }
        };
        let gnorm = inf_norm(&k.g);
        if gnorm <= opts.delta_s {
            let cls = classify_kkt(&k);
            let status = if cls.local_minmax {
                SolveStatus::LocalMinmax
            } else {
                SolveStatus::EquilibriumNotMinmax
            };
            return report(status, x, y, iter, gnorm, cls.singular_hessian, eps, trace, None);
        }
        if iter == opts.max_iters {
            return report(SolveStatus::MaxIters, x, y, iter, gnorm, false, eps, trace, None);
        }
        if inf_norm(&x).max(inf_norm(&y)) > opts.divergence_threshold {
            return report(SolveStatus::Diverged, x, y, iter, gnorm, false, eps, trace, None);
        }

        if gnorm > opts.delta_eps {
            match selector.select(&k, &cfg) {
                Ok(sel) => {
                    eps = sel.modification;
                    frozen = Some(eps);
                }
                Err(e) => {
                    return report(
                        SolveStatus::SingularFailure,
                        x,
                        y,
                        iter,
                        gnorm,
                        false,
                        eps,
                        trace,
                        Some(e.to_string()),
                    )
                }
            }
        } else {
            // inside the freeze neighborhood: zero when admissible, else the
            // last selected values
            eps = if selector.lqac_zero_holds(&k) {
                Modification::zero()
            } else if let Some(f) = frozen {
                f
            } else {
                match selector.select(&k, &cfg) {
                    Ok(sel) => {
                        frozen = Some(sel.modification);
                        sel.modification
                    }
                    Err(e) => {
                        return report(
                            SolveStatus::SingularFailure,
                            x,
                            y,
                            iter,
                            gnorm,
                            false,
                            eps,
                            trace,
                            Some(e.to_string()),
                        )
                    }
                }
            };
        }

        let d = match solve_step(&mut step_engine, &k, eps) {
            Ok(d) => d,
            Err(e) => {
                return report(
                    SolveStatus::SingularFailure,
                    x,
                    y,
                    iter,
                    gnorm,
                    false,
                    eps,
                    trace,
                    Some(e.to_string()),
                )
            }
        };
        for i in 0..dims.n_x {
            x[i] += d[i];
        }
        for j in 0..dims.n_y {
            y[j] += d[dims.n_x + j];
        }
        if let Some(t) = trace.as_mut() {
            t.push(NewtonTraceRow {
                iter,
                gnorm,
                eps_x: eps.eps_x,
                eps_y: eps.eps_y,
                step_norm: inf_norm(&d),
            });
        }
    }
    unreachable!("loop returns on max_iters")
}

/// Certified stability margin `eps_x - lambda_max(eps_y C Hyy^{-2} C^T)` for
/// the selected modification at an unconstrained equilibrium; a nonnegative
/// value certifies that the modification keeps a true local minmax stable.
pub fn stability_margin_diagnostic<T: Scalar>(
    p: &dyn MinmaxProblem<T>,
    x: &[T],
    y: &[T],
    m: Modification<T>,
) -> Result<T, NewtonStepError> {
    let dims = p.dims();
    assert!(dims.is_unconstrained());
    if m.eps_y == T::zero() || dims.n_y == 0 {
        return Ok(m.eps_x);
    }
    let z = PrimalDualPoint::cold_start(p, x, y);
    let k = assemble_scaled_kkt(p, &z, T::zero(), Modification::zero())?;
    // dense blocks of the Hessian
    let hyy = k.jyy.principal_range(0, dims.n_y);
    let mut engine = LdltEngine::new();
    let reading = dual_inertia(&mut engine, &hyy, None, &vec![-1i8; dims.n_y]);
    match reading.consistent() {
        Some(it) if it.zero == 0 => {}
        _ => return Err(NewtonStepError::SingularSystem),
    }
    let factors = engine
        .factor_shifted(&hyy, &vec![T::zero(); dims.n_y], T::zero())
        .map_err(|_| NewtonStepError::SingularSystem)?;
    // V = Hyy^{-1} C^T, column by column of C^T (= rows of C = grad_xy block)
    let mut v = Mat::zeros(dims.n_y, dims.n_x);
    for col in 0..dims.n_x {
        let rhs: Vec<T> = (0..dims.n_y)
            .map(|r| k.jzz.get(dims.n_x + r, col))
            .collect();
        let sol = factors.solve(&rhs).map_err(|_| NewtonStepError::SingularSystem)?;
        for r in 0..dims.n_y {
            v[(r, col)] = sol[r];
        }
    }
    let gram = v.gram_scaled(m.eps_y);
    Ok(m.eps_x - sym_lambda_max(&gram))
}

#[cfg(test)]
mod tests;
