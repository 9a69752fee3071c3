//! Central finite-difference verification of user-supplied derivatives.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::{Dims, MinmaxProblem, Multipliers, PrimalDualPoint, TripletSink};
use crate::linalg::Mat;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct FdIssue<T> {
    pub what: String,
    pub rel_err: T,
}

/// Result of a derivative check; `max_rel_err` is the worst relative
/// discrepancy over every first- and second-derivative block.
#[derive(Debug, Clone)]
pub struct FdReport<T> {
    pub max_rel_err: T,
    pub worst: Vec<FdIssue<T>>,
}

impl<T: Scalar> FdReport<T> {
    pub fn passes(&self, tol: T) -> bool {
        self.max_rel_err <= tol
    }

    fn record(&mut self, what: impl Into<String>, err: T) {
        self.max_rel_err = self.max_rel_err.max(err);
        self.worst.push(FdIssue { what: what.into(), rel_err: err });
        self.worst
            .sort_by(|a, b| b.rel_err.partial_cmp(&a.rel_err).unwrap_or(std::cmp::Ordering::Equal));
        self.worst.truncate(4);
    }
}

fn rel_err<T: Scalar>(a: T, b: T) -> T {
    (a - b).abs() / (T::one() + a.abs().max(b.abs()))
}

fn sink_to_mat<T: Scalar>(rows: usize, cols: usize, sink: &TripletSink<T>, sym: bool) -> Mat<T> {
    let mut m = Mat::zeros(rows, cols);
    for &(i, j, v) in sink.entries() {
        m[(i, j)] += v;
        if sym && i != j {
            m[(j, i)] += v;
        }
    }
    m
}

/// grad_x L and grad_y L at fixed multipliers, built from the first-order
/// callbacks (gradient plus Jacobian-weighted multipliers).
fn grad_lagrangian<T: Scalar>(
    p: &dyn MinmaxProblem<T>,
    x: &[T],
    y: &[T],
    m: &Multipliers<'_, T>,
) -> (Vec<T>, Vec<T>) {
    let dims = p.dims();
    let mut gx = vec![T::zero(); dims.n_x];
    let mut gy = vec![T::zero(); dims.n_y];
    p.grad_x(x, y, &mut gx);
    p.grad_y(x, y, &mut gy);
    let mut jgx = TripletSink::new();
    let mut jfx = TripletSink::new();
    let (mut jgy_x, mut jgy_y) = (TripletSink::new(), TripletSink::new());
    let (mut jfy_x, mut jfy_y) = (TripletSink::new(), TripletSink::new());
    p.jac_eq_x(x, &mut jgx);
    p.jac_ineq_x(x, &mut jfx);
    p.jac_eq_y(x, y, &mut jgy_x, &mut jgy_y);
    p.jac_ineq_y(x, y, &mut jfy_x, &mut jfy_y);
    for &(i, k, v) in jgx.entries() {
        gx[i] += v * m.nu_x[k];
    }
    for &(i, k, v) in jfx.entries() {
        gx[i] += v * m.lam_x[k];
    }
    for &(i, k, v) in jgy_x.entries() {
        gx[i] += v * m.nu_y[k];
    }
    for &(i, k, v) in jfy_x.entries() {
        gx[i] -= v * m.lam_y[k];
    }
    for &(i, k, v) in jgy_y.entries() {
        gy[i] += v * m.nu_y[k];
    }
    for &(i, k, v) in jfy_y.entries() {
        gy[i] -= v * m.lam_y[k];
    }
    (gx, gy)
}

fn central<T: Scalar>(mut eval: impl FnMut(&[T]) -> Vec<T>, v: &[T], j: usize, h: T) -> Vec<T> {
    let mut vp = v.to_vec();
    vp[j] += h;
    let fp = eval(&vp);
    vp[j] = v[j] - h;
    let fm = eval(&vp);
    fp.iter()
        .zip(&fm)
        .map(|(&a, &b)| (a - b) / (T::cast(2.0) * h))
        .collect()
}

/// Checks every derivative callback of `p` at the primal point and
/// multipliers carried by `z`, with per-coordinate steps `step * (1 + |v|)`.
pub fn fd_check<T: Scalar>(
    p: &dyn MinmaxProblem<T>,
    z: &PrimalDualPoint<T>,
    step: T,
) -> FdReport<T> {
    let dims = p.dims();
    let (x, y) = (&z.x[..], &z.y[..]);
    let mults = z.multipliers();
    let mut report = FdReport { max_rel_err: T::zero(), worst: Vec::new() };

    // first derivatives of the objective
    let mut gx = vec![T::zero(); dims.n_x];
    let mut gy = vec![T::zero(); dims.n_y];
    p.grad_x(x, y, &mut gx);
    p.grad_y(x, y, &mut gy);
    for j in 0..dims.n_x {
        let h = step * (T::one() + x[j].abs());
        let fd = central(|xv| vec![p.objective(xv, y)], x, j, h)[0];
        report.record(format!("grad_x[{j}]"), rel_err(fd, gx[j]));
    }
    for j in 0..dims.n_y {
        let h = step * (T::one() + y[j].abs());
        let fd = central(|yv| vec![p.objective(x, yv)], y, j, h)[0];
        report.record(format!("grad_y[{j}]"), rel_err(fd, gy[j]));
    }

    // constraint Jacobians
    let jac_checks: [(&str, bool); 4] = [
        ("jac_eq_x", true),
        ("jac_ineq_x", true),
        ("jac_eq_y", false),
        ("jac_ineq_y", false),
    ];
    for (which, _) in jac_checks {
        let (rows, wrt_x_cols) = match which {
            "jac_eq_x" => (dims.l_x, true),
            "jac_ineq_x" => (dims.m_x, true),
            "jac_eq_y" | "jac_ineq_y" => (if which == "jac_eq_y" { dims.l_y } else { dims.m_y }, false),
            _ => unreachable!(),
        };
        if rows == 0 {
            continue;
        }
        let eval = |xv: &[T], yv: &[T]| -> Vec<T> {
            let mut out = vec![T::zero(); rows];
            match which {
                "jac_eq_x" => p.eq_x(xv, &mut out),
                "jac_ineq_x" => p.ineq_x(xv, &mut out),
                "jac_eq_y" => p.eq_y(xv, yv, &mut out),
                "jac_ineq_y" => p.ineq_y(xv, yv, &mut out),
                _ => unreachable!(),
            }
            out
        };
        let mut sink_x = TripletSink::new();
        let mut sink_y = TripletSink::new();
        match which {
            "jac_eq_x" => p.jac_eq_x(x, &mut sink_x),
            "jac_ineq_x" => p.jac_ineq_x(x, &mut sink_x),
            "jac_eq_y" => p.jac_eq_y(x, y, &mut sink_x, &mut sink_y),
            "jac_ineq_y" => p.jac_ineq_y(x, y, &mut sink_x, &mut sink_y),
            _ => unreachable!(),
        }
        let jx = sink_to_mat(dims.n_x, rows, &sink_x, false);
        for j in 0..dims.n_x {
            let h = step * (T::one() + x[j].abs());
            let fd = central(|xv| eval(xv, y), x, j, h);
            for k in 0..rows {
                report.record(format!("{which}/dx[{j},{k}]"), rel_err(fd[k], jx[(j, k)]));
            }
        }
        if !wrt_x_cols {
            let jy = sink_to_mat(dims.n_y, rows, &sink_y, false);
            for j in 0..dims.n_y {
                let h = step * (T::one() + y[j].abs());
                let fd = central(|yv| eval(x, yv), y, j, h);
                for k in 0..rows {
                    report.record(format!("{which}/dy[{j},{k}]"), rel_err(fd[k], jy[(j, k)]));
                }
            }
        }
    }

    // Lagrangian Hessian blocks against differences of grad L
    let mut hxx = TripletSink::new();
    let mut hxy = TripletSink::new();
    let mut hyy = TripletSink::new();
    p.lag_hess_xx(x, y, &mults, &mut hxx);
    p.lag_hess_xy(x, y, &mults, &mut hxy);
    p.lag_hess_yy(x, y, &mults, &mut hyy);
    let hxx = sink_to_mat(dims.n_x, dims.n_x, &hxx, true);
    let hxy = sink_to_mat(dims.n_x, dims.n_y, &hxy, false);
    let hyy = sink_to_mat(dims.n_y, dims.n_y, &hyy, true);
    for j in 0..dims.n_x {
        let h = step * (T::one() + x[j].abs());
        let fd = central(|xv| grad_lagrangian(p, xv, y, &mults).0, x, j, h);
        for i in 0..dims.n_x {
            report.record(format!("hess_xx[{i},{j}]"), rel_err(fd[i], hxx[(i, j)]));
        }
    }
    for j in 0..dims.n_y {
        let h = step * (T::one() + y[j].abs());
        let fd = central(|yv| grad_lagrangian(p, x, yv, &mults).0, y, j, h);
        for i in 0..dims.n_x {
            report.record(format!("hess_xy[{i},{j}]"), rel_err(fd[i], hxy[(i, j)]));
        }
        let fdy = central(|yv| grad_lagrangian(p, x, yv, &mults).1, y, j, h);
        for i in 0..dims.n_y {
            report.record(format!("hess_yy[{i},{j}]"), rel_err(fdy[i], hyy[(i, j)]));
        }
    }
    report
}

fn random_point<T: Scalar>(dims: Dims, rng: &mut ChaCha8Rng) -> PrimalDualPoint<T> {
    let mut z = PrimalDualPoint::zeros(dims);
    let mut fill = |v: &mut Vec<T>, lo: f64, hi: f64| {
        v.iter_mut().for_each(|e| *e = T::cast(rng.gen_range(lo..hi)));
    };
    fill(&mut z.x, -1.0, 1.0);
    fill(&mut z.y, -1.0, 1.0);
    fill(&mut z.s_x, 0.3, 1.5);
    fill(&mut z.s_y, 0.3, 1.5);
    fill(&mut z.nu_x, -1.0, 1.0);
    fill(&mut z.nu_y, -1.0, 1.0);
    fill(&mut z.lam_x, 0.2, 1.2);
    fill(&mut z.lam_y, 0.2, 1.2);
    z
}

/// Worst report over `n_points` random interior points (seeded).
pub fn fd_check_random_points<T: Scalar>(
    p: &dyn MinmaxProblem<T>,
    n_points: usize,
    seed: u64,
    step: T,
) -> FdReport<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = FdReport { max_rel_err: T::zero(), worst: Vec::new() };
    for _ in 0..n_points {
        let z = random_point(p.dims(), &mut rng);
        let r = fd_check(p, &z, step);
        for issue in r.worst {
            out.record(issue.what, issue.rel_err);
        }
    }
    out
}
