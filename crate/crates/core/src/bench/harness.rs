//! Seeded multistart comparison of pure Newton, gradient descent-ascent and
//! the modified algorithm, with CSV emission and the certification of the two
//! quadratic counterexamples.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use super::functions::{builtin_problem, UnknownProblem, BENCHMARK_FUNCTIONS};
use crate::baselines::{gda_solve, pure_newton_solve, GdaOptions};
use crate::factorization::SymMatrix;
use crate::linalg::{eig2x2, spectral_radius_2x2, Mat};
use crate::newton::{
    classify_equilibrium, select_epsilons_unconstrained, solve as newton_solve, NewtonOptions,
    NewtonReport, SolveStatus,
};
use crate::problem::kkt::Modification;
use crate::problem::Dims;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverId {
    PureNewton,
    Gda,
    Alg1,
}

impl SolverId {
    pub const ALL: [SolverId; 3] = [SolverId::PureNewton, SolverId::Gda, SolverId::Alg1];

    pub fn parse(s: &str) -> Option<SolverId> {
        match s {
            "pure_newton" | "pure-newton" | "newton" => Some(SolverId::PureNewton),
            "gda" => Some(SolverId::Gda),
            "alg1" | "modified" => Some(SolverId::Alg1),
            _ => None,
        }
    }
}

impl std::fmt::Display for SolverId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolverId::PureNewton => "pure_newton",
            SolverId::Gda => "gda",
            SolverId::Alg1 => "alg1",
        })
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig<T> {
    pub functions: Vec<String>,
    pub solvers: Vec<SolverId>,
    pub n_trials: usize,
    pub seed: u64,
    /// Coordinates of the initial points are uniform in this interval.
    pub init_box: (f64, f64),
    pub newton_opts: NewtonOptions<T>,
    pub gda_opts: GdaOptions<T>,
    /// Per-function (alpha_x, alpha_y) overrides for GDA.
    pub gda_steps: HashMap<String, (f64, f64)>,
}

impl<T: Scalar> Default for BenchConfig<T> {
    fn default() -> Self {
        BenchConfig {
            functions: BENCHMARK_FUNCTIONS.iter().map(|s| s.to_string()).collect(),
            solvers: SolverId::ALL.to_vec(),
            n_trials: 1000,
            seed: 1,
            init_box: (-3.0, 3.0),
            newton_opts: NewtonOptions::default(),
            gda_opts: GdaOptions::default(),
            gda_steps: HashMap::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialResult<T> {
    pub function: String,
    pub solver: SolverId,
    pub trial: usize,
    pub init_x: Vec<T>,
    pub init_y: Vec<T>,
    pub status: SolveStatus,
    pub iters: usize,
    pub final_x: Vec<T>,
    pub final_y: Vec<T>,
    /// Converged to a certified local minmax, or to the flagged singular case
    /// which the comparison counts as one.
    pub counts_as_minmax: bool,
    pub singular_hessian: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub function: String,
    pub solver: SolverId,
    pub trials: usize,
    /// Runs that converged to an equilibrium (first-order point).
    pub eq: usize,
    /// Runs counted as converged to a local minmax.
    pub minmax: usize,
    /// Mean iterations over the minmax-converged runs.
    pub mean_iters: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BenchOutcome<T> {
    pub trials: Vec<TrialResult<T>>,
    pub summary: Vec<SummaryRow>,
}

fn trial_from_report<T: Scalar>(
    function: &str,
    solver: SolverId,
    trial: usize,
    init_x: Vec<T>,
    init_y: Vec<T>,
    r: NewtonReport<T>,
) -> TrialResult<T> {
    TrialResult {
        function: function.to_string(),
        solver,
        trial,
        init_x,
        init_y,
        counts_as_minmax: r.counts_as_minmax(),
        singular_hessian: r.singular_hessian,
        status: r.status,
        iters: r.iters,
        final_x: r.x,
        final_y: r.y,
    }
}

/// Runs the multistart comparison. Every solver sees the same initial point
/// for the k-th trial of a function; all randomness flows from `seed`.
pub fn run_benchmark<T: Scalar>(cfg: &BenchConfig<T>) -> Result<BenchOutcome<T>, UnknownProblem> {
    let mut trials: Vec<TrialResult<T>> = Vec::new();
    let mut summary = Vec::new();
    for (fi, fname) in cfg.functions.iter().enumerate() {
        let problem = builtin_problem::<T>(fname)?;
        let dims = problem.dims();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(fi as u64);
        let inits: Vec<(Vec<T>, Vec<T>)> = (0..cfg.n_trials)
            .map(|_| {
                let mut draw = |n: usize| -> Vec<T> {
                    (0..n)
                        .map(|_| T::cast(rng.gen_range(cfg.init_box.0..cfg.init_box.1)))
                        .collect()
                };
                (draw(dims.n_x), draw(dims.n_y))
            })
            .collect();
        let mut gda_opts = cfg.gda_opts.clone();
        if let Some(&(ax, ay)) = cfg.gda_steps.get(fname) {
            gda_opts.alpha_x = T::cast(ax);
            gda_opts.alpha_y = T::cast(ay);
        }
        for &solver in &cfg.solvers {
            let p = problem.as_ref();
            let rows: Vec<TrialResult<T>> = inits
                .par_iter()
                .enumerate()
                .map(|(k, (x0, y0))| {
                    let r = match solver {
                        SolverId::PureNewton => pure_newton_solve(p, x0, y0, &cfg.newton_opts),
                        SolverId::Gda => gda_solve(p, x0, y0, &gda_opts),
                        SolverId::Alg1 => newton_solve(p, x0, y0, &cfg.newton_opts),
                    };
                    trial_from_report(fname, solver, k, x0.clone(), y0.clone(), r)
                })
                .collect();
            // soundness audit: every certified minmax termination must pass an
            // independent re-classification at the final iterate
            for row in &rows {
                if row.status == SolveStatus::LocalMinmax {
                    let cls = classify_equilibrium(p, &row.final_x, &row.final_y)
                        .expect("re-classification failed");
                    assert!(
                        cls.local_minmax,
                        "{fname}/{solver}: trial {} reported a local minmax that fails the \
                         second-order re-check",
                        row.trial
                    );
                }
            }
            let eq = rows.iter().filter(|r| r.status.converged()).count();
            let minmax = rows.iter().filter(|r| r.counts_as_minmax).count();
            let iter_sum: usize = rows
                .iter()
                .filter(|r| r.counts_as_minmax)
                .map(|r| r.iters)
                .sum();
            assert!(minmax <= eq && eq <= cfg.n_trials);
            summary.push(SummaryRow {
                function: fname.clone(),
                solver,
                trials: cfg.n_trials,
                eq,
                minmax,
                mean_iters: (minmax > 0).then(|| iter_sum as f64 / minmax as f64),
            });
            trials.extend(rows);
        }
    }
    Ok(BenchOutcome { trials, summary })
}

fn join_coords<T: Scalar>(v: &[T]) -> String {
    v.iter()
        .map(|x| format!("{x:.17e}"))
        .collect::<Vec<_>>()
        .join(";")
}

/// One row per trial; vector-valued coordinates are ';'-joined inside a field.
pub fn write_trials_csv<T: Scalar>(path: &Path, trials: &[TrialResult<T>]) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(
        f,
        "trial,function,solver,init_x,init_y,final_x,final_y,status,iters,minmax,singular"
    )?;
    for t in trials {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{},{},{}",
            t.trial,
            t.function,
            t.solver,
            join_coords(&t.init_x),
            join_coords(&t.init_y),
            join_coords(&t.final_x),
            join_coords(&t.final_y),
            t.status,
            t.iters,
            t.counts_as_minmax as u8,
            t.singular_hessian as u8
        )?;
    }
    Ok(())
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "function,solver,trials,eq,minmax,mean_iters")?;
    for r in rows {
        writeln!(
            f,
            "{},{},{},{},{},{}",
            r.function,
            r.solver,
            r.trials,
            r.eq,
            r.minmax,
            r.mean_iters.map_or(String::new(), |m| format!("{m:.3}"))
        )?;
    }
    Ok(())
}

/// Seed and configuration echo in JSON-style text.
pub fn write_manifest<T: Scalar>(path: &Path, cfg: &BenchConfig<T>) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    let functions: Vec<String> = cfg.functions.iter().map(|s| format!("\"{s}\"")).collect();
    let solvers: Vec<String> = cfg.solvers.iter().map(|s| format!("\"{s}\"")).collect();
    writeln!(f, "{{")?;
    writeln!(f, "  \"seed\": {},", cfg.seed)?;
    writeln!(f, "  \"trials\": {},", cfg.n_trials)?;
    writeln!(f, "  \"functions\": [{}],", functions.join(", "))?;
    writeln!(f, "  \"solvers\": [{}],", solvers.join(", "))?;
    writeln!(f, "  \"init_box\": [{}, {}],", cfg.init_box.0, cfg.init_box.1)?;
    writeln!(f, "  \"delta_s\": {:e},", cfg.newton_opts.delta_s)?;
    writeln!(f, "  \"newton_max_iters\": {},", cfg.newton_opts.max_iters)?;
    writeln!(f, "  \"gda_max_iters\": {},", cfg.gda_opts.max_iters)?;
    writeln!(f, "  \"gda_alpha\": [{}, {}]", cfg.gda_opts.alpha_x, cfg.gda_opts.alpha_y)?;
    writeln!(f, "}}")?;
    Ok(())
}

#[derive(Debug, Error)]
pub enum CertificationFailure {
    #[error("counterexample certification failed: {0}")]
    Mismatch(String),
}

/// Outcome of the quadratic counterexample certification.
#[derive(Debug, Clone)]
pub struct CertReport {
    /// Eigenvalues (re, im) of the iteration Jacobian of the first
    /// counterexample with the quadratic-conditions-only pair (0, 4).
    pub attractive_eigenvalues: [(f64, f64); 2],
    /// Eigenvalues of the second counterexample with the pair (0.3, 3).
    pub repelled_eigenvalues: [(f64, f64); 2],
    /// Modification our selector picks for the first counterexample.
    pub selected: Modification<f64>,
    /// Spectral radius of the iteration Jacobian under `selected`.
    pub selected_radius: f64,
}

fn hessian_2x2(hxx: f64, hxy: f64, hyy: f64) -> SymMatrix<f64> {
    SymMatrix::dense_from_lower(2, |i, j| match (i, j) {
        (0, 0) => hxx,
        (1, 0) => hxy,
        (1, 1) => hyy,
        _ => unreachable!(),
    })
}

/// Iteration Jacobian `I - (H + E)^{-1} H` for a 2x2 Hessian.
pub fn iteration_jacobian_2x2(h: &SymMatrix<f64>, m: Modification<f64>) -> Mat<f64> {
    let he = [
        [h.get(0, 0) + m.eps_x, h.get(0, 1)],
        [h.get(1, 0), h.get(1, 1) - m.eps_y],
    ];
    let det = he[0][0] * he[1][1] - he[0][1] * he[1][0];
    let inv = [
        [he[1][1] / det, -he[0][1] / det],
        [-he[1][0] / det, he[0][0] / det],
    ];
    Mat::from_fn(2, 2, |i, j| {
        let prod = inv[i][0] * h.get(0, j) + inv[i][1] * h.get(1, j);
        if i == j {
            1.0 - prod
        } else {
            -prod
        }
    })
}

/// Certifies the two quadratic counterexamples: the quadratic-approximation
/// conditions alone make a non-minmax equilibrium attractive (eigenvalues
/// {0, 0.54}) and can make a true local minmax repelling (eigenvalues
/// 1.5 +/- 1.5i), and our selector reproduces neither pair.
pub fn certify_counterexamples() -> Result<CertReport, CertificationFailure> {
    let tol = 0.02;

    // first counterexample: f = 1.5x^2 - 4xy + y^2 with (eps_x, eps_y) = (0, 4)
    let h1 = hessian_2x2(3.0, -4.0, 2.0);
    let jac1 = iteration_jacobian_2x2(&h1, Modification::new(0.0, 4.0));
    let mut e1 = eig2x2(&jac1);
    e1.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    if e1.iter().any(|&(_, im)| im.abs() > tol)
        || (e1[0].0 - 0.0).abs() > tol
        || (e1[1].0 - 0.54).abs() > tol
    {
        return Err(CertificationFailure::Mismatch(format!(
            "expected eigenvalues (0, 0.54), got {e1:?}"
        )));
    }

    // second counterexample: f = -0.25x^2 + xy - 0.5y^2 with (0.3, 3)
    let h2 = hessian_2x2(-0.5, 1.0, -1.0);
    let jac2 = iteration_jacobian_2x2(&h2, Modification::new(0.3, 3.0));
    let e2 = eig2x2(&jac2);
    let modulus = (e2[0].0 * e2[0].0 + e2[0].1 * e2[0].1).sqrt();
    if (e2[0].0 - 1.5).abs() > tol || (e2[0].1.abs() - 1.5).abs() > tol || modulus <= 1.0 {
        return Err(CertificationFailure::Mismatch(format!(
            "expected eigenvalues 1.5 +/- 1.5i with modulus > 1, got {e2:?}"
        )));
    }

    // our selector must reject both printed pairs
    let opts = NewtonOptions::<f64>::default();
    let sel1 = select_epsilons_unconstrained(&h1, Dims::unconstrained(1, 1), &opts)
        .map_err(|e| CertificationFailure::Mismatch(e.to_string()))?;
    let m1 = sel1.modification;
    if (m1.eps_x, m1.eps_y) == (0.0, 4.0) {
        return Err(CertificationFailure::Mismatch(
            "selector reproduced the attractive pair (0, 4)".into(),
        ));
    }
    let radius = spectral_radius_2x2(&iteration_jacobian_2x2(&h1, m1));
    if radius <= 1.0 {
        return Err(CertificationFailure::Mismatch(format!(
            "selected pair ({}, {}) leaves the non-minmax equilibrium attractive (radius {radius})",
            m1.eps_x, m1.eps_y
        )));
    }
    let sel2 = select_epsilons_unconstrained(&h2, Dims::unconstrained(1, 1), &opts)
        .map_err(|e| CertificationFailure::Mismatch(e.to_string()))?;
    if (sel2.modification.eps_x, sel2.modification.eps_y) == (0.3, 3.0) {
        return Err(CertificationFailure::Mismatch(
            "selector reproduced the repelling pair (0.3, 3)".into(),
        ));
    }

    Ok(CertReport {
        attractive_eigenvalues: e1,
        repelled_eigenvalues: e2,
        selected: m1,
        selected_radius: radius,
    })
}

#[cfg(test)]
mod tests;
