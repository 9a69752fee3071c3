//! Modified primal-dual interior-point solver for constrained minmax.
//!
//! The driver follows the modification-selection loop of the Newton solver
//! with three additions: the residual carries a barrier parameter `b` that is
//! reduced by `sigma` whenever `||g(z,b)||_inf <= b` (down to the terminal
//! floor `b_min`, where classification happens), steps are scaled by the
//! fraction-to-boundary rule so slacks and inequality multipliers stay
//! strictly positive, and classification additionally checks strict
//! complementarity on the active set.

use thiserror::Error;

use crate::epsilon::{EpsilonSelector, SelectorConfig};
use crate::factorization::{FactorError, Inertia, LdltEngine};
use crate::newton::{classify_kkt, factor_step_matrix, NewtonOptions, SolveStatus};
use crate::problem::kkt::{
    assemble_scaled_kkt, e_diag, gamma_signs_zz, AssemblyError, KktAssembler, KktSystem,
    Modification,
};
use crate::problem::{MinmaxProblem, PrimalDualPoint, ZLayout};
use crate::scalar::{inf_norm, Scalar};

#[derive(Debug, Clone)]
pub struct IpOptions<T> {
    pub newton: NewtonOptions<T>,
    /// Initial barrier parameter.
    pub b0: T,
    /// Barrier reduction factor in (0, 1).
    pub sigma: T,
    /// Terminal barrier floor; classification happens at this value.
    pub b_min: T,
    /// Fraction-to-boundary parameter in (0, 1).
    pub tau_ftb: T,
}

impl<T: Scalar> Default for IpOptions<T> {
    fn default() -> Self {
        IpOptions {
            newton: NewtonOptions::default(),
            b0: T::one(),
            sigma: T::cast(0.2),
            b_min: T::cast(1e-9),
            tau_ftb: T::cast(0.995),
        }
    }
}

impl<T: Scalar> IpOptions<T> {
    pub fn validate(&self) {
        self.newton.validate();
        assert!(self.sigma > T::zero() && self.sigma < T::one());
        assert!(self.tau_ftb > T::zero() && self.tau_ftb < T::one());
        assert!(self.b0 > self.b_min && self.b_min >= T::zero());
    }
}

#[derive(Debug, Clone)]
pub struct IpTraceRow<T> {
    pub iter: usize,
    pub b: T,
    pub gnorm: T,
    pub alpha: T,
    pub eps_x: T,
    pub eps_y: T,
    pub inertia: Inertia,
}

#[derive(Debug, Clone)]
pub struct IpReport<T> {
    pub status: SolveStatus,
    pub z: PrimalDualPoint<T>,
    pub b: T,
    pub iters: usize,
    pub gnorm: T,
    pub singular_hessian: bool,
    pub strict_complementarity_ok: bool,
    pub trace: Option<Vec<IpTraceRow<T>>>,
    pub failure: Option<String>,
}

impl<T: Scalar> IpReport<T> {
    pub fn counts_as_minmax(&self) -> bool {
        self.status == SolveStatus::LocalMinmax
            || (self.status == SolveStatus::EquilibriumNotMinmax && self.singular_hessian)
    }
}

#[derive(Debug, Error)]
pub enum IpStepError {
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error("modified KKT matrix is singular")]
    SingularSystem,
    #[error("fraction-to-boundary step length collapsed (alpha = {alpha})")]
    StalledStep { alpha: f64 },
}

/// Largest step fraction keeping the slack and inequality-multiplier blocks
/// nonnegative, scaled by `tau` and capped at one.
pub fn fraction_to_boundary<T: Scalar>(z: &PrimalDualPoint<T>, dz: &[T], tau: T) -> T {
    let dims = z.dims_of();
    let l = ZLayout::new(dims);
    let mut amax = T::infinity();
    let mut scan = |vals: &[T], off: usize| {
        for (k, &v) in vals.iter().enumerate() {
            let d = dz[off + k];
            if d < T::zero() {
                amax = amax.min(-v / d);
            }
        }
    };
    scan(&z.s_x, l.s_x);
    scan(&z.s_y, l.s_y);
    scan(&z.lam_x, l.lam_x);
    scan(&z.lam_y, l.lam_y);
    if amax.is_finite() {
        T::one().min(tau * amax)
    } else {
        T::one()
    }
}

/// Selects the modification for an assembled constrained system.
pub fn select_epsilons_constrained<T: Scalar>(
    k: &KktSystem<T>,
    opts: &IpOptions<T>,
) -> Result<crate::epsilon::Selection<T>, crate::epsilon::EpsilonError> {
    EpsilonSelector::new().select(k, &opts.newton.selector_config())
}

fn step_direction<T: Scalar>(
    engine: &mut LdltEngine,
    k: &KktSystem<T>,
    m: Modification<T>,
) -> Result<Vec<T>, IpStepError> {
    let e = e_diag(k.dims, m);
    let signs = gamma_signs_zz(k.dims);
    let factors =
        factor_step_matrix(engine, &k.jzz, &e, &signs).map_err(|_| IpStepError::SingularSystem)?;
    let rhs: Vec<T> = k.g.iter().zip(&k.scaling).map(|(&g, &s)| -(g / s)).collect();
    factors
        .solve_refined(|x, y| k.jzz.matvec_shifted(x, y, Some(&e)), &rhs)
        .map_err(|e| match e {
            FactorError::SingularSystem { .. } | FactorError::FactorizationBreakdown { .. } => {
                IpStepError::SingularSystem
            }
        })
}

/// One interior-point step `z - alpha (J+E)^{-1} S^{-1} g(z,b)`.
pub fn ip_step<T: Scalar>(
    p: &dyn MinmaxProblem<T>,
    z: &PrimalDualPoint<T>,
    b: T,
    m: Modification<T>,
    tau: T,
) -> Result<(PrimalDualPoint<T>, T), IpStepError> {
    let k = assemble_scaled_kkt(p, z, b, m)?;
    let mut engine = LdltEngine::new();
    let d = step_direction(&mut engine, &k, m)?;
    let alpha = fraction_to_boundary(z, &d, tau);
    if alpha < T::cast(1e-12) {
        return Err(IpStepError::StalledStep { alpha: alpha.to_f64() });
    }
    let mut zn = z.clone();
    zn.add_scaled(&d, alpha);
    Ok((zn, alpha))
}

/// Strict complementarity at the putative solution: every active inequality
/// (slack below `1e-6 (1 + ||s||)`) needs a multiplier above `1e-8`.
fn strict_complementarity_ok<T: Scalar>(z: &PrimalDualPoint<T>) -> bool {
    let check = |s: &[T], lam: &[T]| -> bool {
        let norm = inf_norm(s);
        let active_tol = T::cast(1e-6) * (T::one() + norm);
        s.iter()
            .zip(lam)
            .all(|(&si, &li)| si >= active_tol || li > T::cast(1e-8))
    };
    check(&z.s_x, &z.lam_x) && check(&z.s_y, &z.lam_y)
}

#[cfg(debug_assertions)]
fn spot_check_scaling_identity<T: Scalar>(
    p: &dyn MinmaxProblem<T>,
    z: &PrimalDualPoint<T>,
    k: &KktSystem<T>,
) {
    if k.jzz.dim() > 200 {
        return;
    }
    let h = match crate::problem::kkt::assemble_hzz_direct(p, z) {
        Ok(h) => h,
        Err(_) => return,
    };
    let scale = T::one() + h.inf_norm();
    for i in 0..k.jzz.dim() {
        for j in 0..=i {
            let lhs = k.scaling[i].sqrt() * k.jzz.get(i, j) * k.scaling[j].sqrt();
            debug_assert!(
                (lhs - h.get(i, j)).abs() <= T::cast(1e-10) * scale,
                "scaled-matrix identity violated at ({i},{j})"
            );
        }
    }
}

/// Modified primal-dual interior-point driver.
///
/// `z0 = None` cold-starts from zero primal values with `s = max(-F, 1)` and
/// unit inequality multipliers.
pub fn ip_solve<T: Scalar>(
    p: &dyn MinmaxProblem<T>,
    z0: Option<PrimalDualPoint<T>>,
    opts: &IpOptions<T>,
) -> IpReport<T> {
    opts.validate();
    let dims = p.dims();
    let mut z = z0.unwrap_or_else(|| {
        PrimalDualPoint::cold_start(p, &vec![T::zero(); dims.n_x], &vec![T::zero(); dims.n_y])
    });
    let mut trace = opts.newton.keep_trace.then(Vec::new);
    let fail = |status: SolveStatus, z, b, iters, gnorm, msg: Option<String>, trace| IpReport {
        status,
        z,
        b,
        iters,
        gnorm,
        singular_hessian: false,
        strict_complementarity_ok: true,
        trace,
        failure: msg,
    };

    if z.dims_of() != dims {
        return fail(
            SolveStatus::InfeasibleStart,
            z,
            opts.b0,
            0,
            T::infinity(),
            Some("iterate shape does not match problem dimensions".into()),
            trace,
        );
    }
    if !z.all_finite() || ((dims.m_x + dims.m_y > 0) && !z.strictly_feasible()) {
        return fail(
            SolveStatus::InfeasibleStart,
            z,
            opts.b0,
            0,
            T::infinity(),
            Some("start violates positivity of slacks/inequality multipliers".into()),
            trace,
        );
    }

    // without inequalities the barrier has no role
    let mut b = if dims.m_x + dims.m_y == 0 { opts.b_min } else { opts.b0 };
    let b_done = opts.b_min * (T::one() + T::cast(1e-9));
    let mut asm = KktAssembler::new(dims);
    let mut selector = EpsilonSelector::new();
    let mut step_engine = LdltEngine::new();
    let cfg: SelectorConfig<T> = opts.newton.selector_config();
    let mut frozen: Option<Modification<T>> = None;
    let mut eps = Modification::zero();
    let mut small_alpha_streak = 0usize;

    for iter in 0..=opts.newton.max_iters {
        let k = match asm.scaled_kkt(p, &z, b, eps) {
            Ok(k) => k,
            Err(e) => {
                return fail(
                    SolveStatus::SingularFailure,
                    z,
                    b,
                    iter,
                    T::infinity(),
                    Some(e.to_string()),
                    trace,
                )
            }
        };
        let gnorm = inf_norm(&k.g);
        #[cfg(debug_assertions)]
        if iter % 10 == 0 {
            spot_check_scaling_identity(p, &z, &k);
        }

        if gnorm <= opts.newton.delta_s && b <= b_done {
            let cls = classify_kkt(&k);
            let sc_ok = strict_complementarity_ok(&z);
            let status = if cls.local_minmax && sc_ok {
                SolveStatus::LocalMinmax
            } else {
                SolveStatus::EquilibriumNotMinmax
            };
            return IpReport {
                status,
                z,
                b,
                iters: iter,
                gnorm,
                singular_hessian: cls.singular_hessian,
                strict_complementarity_ok: sc_ok,
                trace,
                failure: None,
            };
        }
        if iter == opts.newton.max_iters {
            return fail(SolveStatus::MaxIters, z, b, iter, gnorm, None, trace);
        }
        if inf_norm(&z.x).max(inf_norm(&z.y)) > opts.newton.divergence_threshold {
            return fail(SolveStatus::Diverged, z, b, iter, gnorm, None, trace);
        }

        if gnorm > opts.newton.delta_eps {
            match selector.select(&k, &cfg) {
                Ok(sel) => {
                    eps = sel.modification;
                    frozen = Some(eps);
                }
                Err(e) => {
                    return fail(
                        SolveStatus::SingularFailure,
                        z,
                        b,
                        iter,
                        gnorm,
                        Some(e.to_string()),
                        trace,
                    )
                }
            }
        } else {
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
                        return fail(
                            SolveStatus::SingularFailure,
                            z,
                            b,
                            iter,
                            gnorm,
                            Some(e.to_string()),
                            trace,
                        )
                    }
                }
            };
        }

        let d = match step_direction(&mut step_engine, &k, eps) {
            Ok(d) => d,
            Err(e) => {
                return fail(
                    SolveStatus::SingularFailure,
                    z,
                    b,
                    iter,
                    gnorm,
                    Some(e.to_string()),
                    trace,
                )
            }
        };
        let alpha = fraction_to_boundary(&z, &d, opts.tau_ftb);
        if alpha < T::cast(1e-8) {
            small_alpha_streak += 1;
            if alpha < T::cast(1e-12) || small_alpha_streak >= 3 {
                return fail(
                    SolveStatus::SingularFailure,
                    z,
                    b,
                    iter,
                    gnorm,
                    Some(format!("stalled: {small_alpha_streak} consecutive steps with alpha < 1e-8")),
                    trace,
                );
            }
        } else {
            small_alpha_streak = 0;
        }
        z.add_scaled(&d, alpha);
        // positivity is an invariant of the fraction-to-boundary rule
        if dims.m_x + dims.m_y > 0 && !z.strictly_feasible() {
            return fail(
                SolveStatus::SingularFailure,
                z,
                b,
                iter,
                gnorm,
                Some("internal: positivity lost after accepted step".into()),
                trace,
            );
        }

        if let Some(t) = trace.as_mut() {
            let e = e_diag(dims, eps);
            let signs = gamma_signs_zz(dims);
            let inertia = crate::epsilon::dual_inertia(&mut step_engine, &k.jzz, Some(&e), &signs)
                .plus
                .unwrap_or(Inertia::new(0, 0, k.jzz.dim()));
            t.push(IpTraceRow {
                iter,
                b,
                gnorm,
                alpha,
                eps_x: eps.eps_x,
                eps_y: eps.eps_y,
                inertia,
            });
        }

        // barrier decreases exactly when the residual is below it
        let gnorm_new = match asm.residual(p, &z, b) {
            Ok(g) => inf_norm(&g),
            Err(e) => {
                return fail(
                    SolveStatus::SingularFailure,
                    z,
                    b,
                    iter + 1,
                    T::infinity(),
                    Some(e.to_string()),
                    trace,
                )
            }
        };
        if gnorm_new <= b && b > opts.b_min {
            b = (opts.sigma * b).max(opts.b_min);
        }
    }
    unreachable!()
}

/// Convenience entry: cold start from a primal point.
pub fn ip_solve_from<T: Scalar>(
    p: &dyn MinmaxProblem<T>,
    x0: &[T],
    y0: &[T],
    opts: &IpOptions<T>,
) -> IpReport<T> {
    ip_solve(p, Some(PrimalDualPoint::cold_start(p, x0, y0)), opts)
}

#[cfg(test)]
mod tests;
