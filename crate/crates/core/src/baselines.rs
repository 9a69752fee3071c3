//! Baseline solvers for the benchmark comparison: pure Newton (zero
//! modification) and gradient descent-ascent.

use crate::factorization::LdltEngine;
use crate::newton::{
    classify_kkt, NewtonOptions, NewtonReport, NewtonTraceRow, SolveStatus,
};
use crate::problem::kkt::{e_diag, gamma_signs_zz, KktAssembler, Modification};
use crate::problem::{MinmaxProblem, PrimalDualPoint};
use crate::scalar::{inf_norm, Scalar};

#[derive(Debug, Clone)]
pub struct GdaOptions<T> {
    pub alpha_x: T,
    pub alpha_y: T,
    pub max_iters: usize,
    pub delta_s: T,
    pub divergence_threshold: T,
    pub keep_trace: bool,
}

impl<T: Scalar> Default for GdaOptions<T> {
    fn default() -> Self {
        GdaOptions {
            alpha_x: T::cast(0.05),
            alpha_y: T::cast(0.05),
            max_iters: 50_000,
            delta_s: T::cast(1e-5),
            divergence_threshold: T::cast(1e8),
            keep_trace: false,
        }
    }
}

/// Newton iterations with E = 0; attracted to any equilibrium, singular
/// Hessians fail instead of being regularized away.
pub fn pure_newton_solve<T: Scalar>(
    p: &dyn MinmaxProblem<T>,
    x0: &[T],
    y0: &[T],
    opts: &NewtonOptions<T>,
) -> NewtonReport<T> {
    let dims = p.dims();
    assert!(dims.is_unconstrained());
    let mut x = x0.to_vec();
    let mut y = y0.to_vec();
    let mut asm = KktAssembler::new(dims);
    let mut engine = LdltEngine::new();
    let signs = gamma_signs_zz(dims);
    let zero_e = e_diag(dims, Modification::<T>::zero());
    let mut trace = opts.keep_trace.then(Vec::new);
    let finish = |status: SolveStatus,
                      x: Vec<T>,
                      y: Vec<T>,
                      iters,
                      gnorm,
                      singular,
                      trace,
                      failure| NewtonReport {
        status,
        x,
        y,
        iters,
        gnorm,
        singular_hessian: singular,
        eps: Modification::zero(),
        trace,
        failure,
    };
    for iter in 0..=opts.max_iters {
        let z = PrimalDualPoint::cold_start(p, &x, &y);
        let k = match asm.scaled_kkt(p, &z, T::zero(), Modification::zero()) {
            Ok(k) => k,
            Err(e) => {
                return finish(
                    SolveStatus::SingularFailure,
                    x,
                    y,
                    iter,
                    T::infinity(),
                    false,
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
            return finish(status, x, y, iter, gnorm, cls.singular_hessian, trace, None);
        }
        if iter == opts.max_iters {
            return finish(SolveStatus::MaxIters, x, y, iter, gnorm, false, trace, None);
        }
        if inf_norm(&x).max(inf_norm(&y)) > opts.divergence_threshold {
            return finish(SolveStatus::Diverged, x, y, iter, gnorm, false, trace, None);
        }
        let d = match crate::newton::factor_step_matrix(&mut engine, &k.jzz, &zero_e, &signs)
            .and_then(|f| {
                f.solve_refined(|v, out| k.jzz.matvec(v, out), &k.g.iter().map(|&g| -g).collect::<Vec<_>>())
                    .map_err(|_| crate::newton::NewtonStepError::SingularSystem)
            }) {
            Ok(d) => d,
            Err(e) => {
                return finish(
                    SolveStatus::SingularFailure,
                    x,
                    y,
                    iter,
                    gnorm,
                    false,
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
                eps_x: T::zero(),
                eps_y: T::zero(),
                step_norm: inf_norm(&d),
            });
        }
    }
    unreachable!()
}

/// Plain gradient descent on x, ascent on y, with fixed step sizes.
pub fn gda_solve<T: Scalar>(
    p: &dyn MinmaxProblem<T>,
    x0: &[T],
    y0: &[T],
    opts: &GdaOptions<T>,
) -> NewtonReport<T> {
    let dims = p.dims();
    assert!(dims.is_unconstrained());
    assert!(opts.alpha_x > T::zero() && opts.alpha_y > T::zero());
    let mut x = x0.to_vec();
    let mut y = y0.to_vec();
    let mut gx = vec![T::zero(); dims.n_x];
    let mut gy = vec![T::zero(); dims.n_y];
    let mut trace = opts.keep_trace.then(Vec::new);
    for iter in 0..=opts.max_iters {
        p.grad_x(&x, &y, &mut gx);
        p.grad_y(&x, &y, &mut gy);
        let gnorm = inf_norm(&gx).max(inf_norm(&gy));
        let done = gnorm <= opts.delta_s;
        let diverged = !done && inf_norm(&x).max(inf_norm(&y)) > opts.divergence_threshold;
        if done || diverged || iter == opts.max_iters {
            let status = if done {
                let cls = crate::newton::classify_equilibrium(p, &x, &y);
                match cls {
                    Ok(c) if c.local_minmax => SolveStatus::LocalMinmax,
                    Ok(_) => SolveStatus::EquilibriumNotMinmax,
                    Err(_) => SolveStatus::SingularFailure,
                }
            } else if diverged {
                SolveStatus::Diverged
            } else {
                SolveStatus::MaxIters
            };
            let singular = status == SolveStatus::EquilibriumNotMinmax
                && crate::newton::classify_equilibrium(p, &x, &y)
                    .map(|c| c.singular_hessian)
                    .unwrap_or(false);
            return NewtonReport {
                status,
                x,
                y,
                iters: iter,
                gnorm,
                singular_hessian: singular,
                eps: Modification::zero(),
                trace,
                failure: None,
            };
        }
        for i in 0..dims.n_x {
            x[i] -= opts.alpha_x * gx[i];
        }
        for j in 0..dims.n_y {
            y[j] += opts.alpha_y * gy[j];
        }
        if let Some(t) = trace.as_mut() {
            t.push(NewtonTraceRow {
                iter,
                gnorm,
                eps_x: T::zero(),
                eps_y: T::zero(),
                step_norm: T::zero(),
            });
        }
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::builtin_problem;

    #[test]
    fn pure_newton_bilinear_single_iteration() {
        let p = builtin_problem::<f64>("f4").unwrap();
        for start in [[2.3, -0.4], [-1.0, 1.0], [0.01, 3.0]] {
            let r = pure_newton_solve(p.as_ref(), &start[..1], &start[1..], &NewtonOptions::default());
            assert!(r.status.converged());
            assert_eq!(r.iters, 1);
            assert!(r.x[0].abs() < 1e-12 && r.y[0].abs() < 1e-12);
        }
    }

    #[test]
    fn pure_newton_attracted_to_cubic_maximum() {
        let p = builtin_problem::<f64>("cubic_min").unwrap();
        let r = pure_newton_solve(p.as_ref(), &[-0.5], &[], &NewtonOptions::default());
        assert_eq!(r.status, SolveStatus::EquilibriumNotMinmax);
        assert!((r.x[0] + 1.0).abs() < 1e-6, "went to {}", r.x[0]);
    }

    #[test]
    fn pure_newton_fails_on_singular_hessian() {
        let p = builtin_problem::<f64>("cubic_min").unwrap();
        let r = pure_newton_solve(p.as_ref(), &[0.0], &[], &NewtonOptions::default());
        assert_eq!(r.status, SolveStatus::SingularFailure);
    }

    #[test]
    fn gda_converges_on_decoupled_saddle() {
        let p = builtin_problem::<f64>("f1").unwrap();
        let r = gda_solve(p.as_ref(), &[0.5], &[0.3], &GdaOptions::default());
        assert_eq!(r.status, SolveStatus::LocalMinmax);
        // first-order method: far more iterations than Newton
        assert!(r.iters > 20, "iters {}", r.iters);
        // fixed points of GDA have vanishing gradients
        assert!(r.gnorm <= 1e-5);
    }

    #[test]
    fn gda_spirals_away_from_bilinear_saddle() {
        let p = builtin_problem::<f64>("f4").unwrap();
        let r = gda_solve(p.as_ref(), &[0.1], &[0.1], &GdaOptions::default());
        assert_eq!(r.status, SolveStatus::Diverged);
    }

    #[test]
    fn newton_quadratic_residual_decrease_near_equilibrium() {
        // tail iterations contract at least quadratically: g_{k+1} <= C g_k^2
        let p = builtin_problem::<f64>("f1").unwrap();
        let mut opts = NewtonOptions::default();
        opts.keep_trace = true;
        opts.delta_s = 1e-12;
        let r = pure_newton_solve(p.as_ref(), &[0.4], &[0.2], &opts);
        assert!(r.status.converged());
        let trace = r.trace.unwrap();
        let tail: Vec<f64> = trace.iter().rev().take(3).map(|t| t.gnorm).collect();
        for w in tail.windows(2) {
            // rows are reversed: w[0] is the later iterate
            let c = w[0] / (w[1] * w[1]);
            assert!(c < 1e3, "contraction constant {c}");
        }
    }
}
