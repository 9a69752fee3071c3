//! Pursuit-evasion case study: a steering-constrained car chases a slower but
//! fully agile walker, each controlled by model predictive control on a
//! shared minmax horizon problem. The study exercises the instability toggle
//! (does the evader find genuine local maxima or get stuck at equilibria that
//! are none) and the horizon scaling of the two formulations.

mod sequential;
mod simultaneous;

use std::io::Write;
use std::path::Path;
use std::time::Instant;

pub use sequential::SequentialProblem;
pub use simultaneous::SimultaneousProblem;

use crate::interior_point::{ip_solve, IpOptions};
use crate::newton::SolveStatus;
use crate::problem::{MinmaxProblem, PrimalDualPoint};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct ChauffeurParams<T> {
    /// Pursuer forward speed per step.
    pub v: T,
    /// Steering bound |u| <= u_max.
    pub u_max: T,
    /// Evader speed bound |d| <= d_max.
    pub d_max: T,
    /// Steering effort weight in the stage cost.
    pub gamma_u: T,
    /// Evader effort weight (subtracted: the evader pays for moving).
    pub gamma_d: T,
    /// Horizon length T.
    pub horizon: usize,
    /// MPC episode length.
    pub n_steps: usize,
    pub x_p0: [T; 3],
    pub x_e0: [T; 2],
}

impl<T: Scalar> Default for ChauffeurParams<T> {
    fn default() -> Self {
        ChauffeurParams {
            v: T::cast(0.3),
            u_max: T::cast(0.5),
            d_max: T::cast(0.2),
            gamma_u: T::cast(0.1),
            gamma_d: T::cast(1.0),
            horizon: 20,
            n_steps: 50,
            x_p0: [T::zero(), T::zero(), T::zero()],
            x_e0: [T::one(), T::cast(0.5)],
        }
    }
}

/// Discrete Dubins step of the pursuer.
pub fn pursuer_step<T: Scalar>(x_p: &[T; 3], u: T, v: T) -> [T; 3] {
    [
        x_p[0] + v * x_p[2].cos(),
        x_p[1] + v * x_p[2].sin(),
        x_p[2] + u,
    ]
}

/// Accumulator step of the evader.
pub fn evader_step<T: Scalar>(x_e: &[T; 2], d: &[T; 2]) -> [T; 2] {
    [x_e[0] + d[0], x_e[1] + d[1]]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    Simultaneous,
    Sequential,
}

impl std::fmt::Display for Formulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Formulation::Simultaneous => "simultaneous",
            Formulation::Sequential => "sequential",
        })
    }
}

/// Builds the horizon problem at the given current states.
pub fn build_horizon_problem<T: Scalar>(
    params: &ChauffeurParams<T>,
    x_p: [T; 3],
    x_e: [T; 2],
    mode: Formulation,
) -> Box<dyn MinmaxProblem<T>> {
    match mode {
        Formulation::Simultaneous => Box::new(SimultaneousProblem::new(*params, x_p, x_e)),
        Formulation::Sequential => Box::new(SequentialProblem::new(*params, x_p, x_e)),
    }
}

/// When the instability-enforcement branch of the selection is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstabilityMode {
    On,
    Off,
    /// Off before the given episode step, on afterwards.
    After(usize),
}

impl InstabilityMode {
    pub fn active_at(self, t: usize) -> bool {
        match self {
            InstabilityMode::On => true,
            InstabilityMode::Off => false,
            InstabilityMode::After(n) => t >= n,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "on" => Some(InstabilityMode::On),
            "off" => Some(InstabilityMode::Off),
            _ => s
                .strip_prefix("after:")
                .and_then(|n| n.parse().ok())
                .map(InstabilityMode::After),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeStep<T> {
    pub t: usize,
    /// States at the beginning of the step.
    pub x_p: [T; 3],
    pub x_e: [T; 2],
    /// Controls applied at this step.
    pub u: T,
    pub d: [T; 2],
    /// Stage cost evaluated at the post-step states.
    pub stage_cost: T,
    pub status: SolveStatus,
    pub iters: usize,
    pub singular: bool,
}

#[derive(Debug, Clone)]
pub struct EpisodeLog<T> {
    pub steps: Vec<EpisodeStep<T>>,
    pub mean_cost: T,
}

impl<T: Scalar> EpisodeLog<T> {
    pub fn count_status(&self, status: SolveStatus) -> usize {
        self.steps.iter().filter(|s| s.status == status).count()
    }
}

/// Shifts a horizon solution by one stage: stage blocks move down, the last
/// stage is duplicated and its multipliers reset to one.
fn shift_warm_start<T: Scalar>(prev: &PrimalDualPoint<T>, horizon: usize) -> PrimalDualPoint<T> {
    let mut z = prev.clone();
    let t = horizon;
    let shift_block = |v: &mut Vec<T>, per_stage: usize| {
        if t < 2 {
            return;
        }
        for i in 0..(t - 1) * per_stage {
            v[i] = v[i + per_stage];
        }
    };
    shift_block(&mut z.x, 4);
    shift_block(&mut z.y, 4);
    shift_block(&mut z.s_x, 1);
    shift_block(&mut z.s_y, 1);
    shift_block(&mut z.nu_x, 3);
    shift_block(&mut z.nu_y, 2);
    shift_block(&mut z.lam_x, 1);
    shift_block(&mut z.lam_y, 1);
    // new (duplicated) last stage: multipliers back to one
    z.lam_x[t - 1] = T::one();
    z.lam_y[t - 1] = T::one();
    for k in 0..3 {
        z.nu_x[3 * (t - 1) + k] = T::one();
    }
    for k in 0..2 {
        z.nu_y[2 * (t - 1) + k] = T::one();
    }
    // strict positivity floor after shifting
    let floor = T::cast(1e-10);
    for v in z
        .s_x
        .iter_mut()
        .chain(&mut z.s_y)
        .chain(&mut z.lam_x)
        .chain(&mut z.lam_y)
    {
        *v = v.max(floor);
    }
    z
}

/// Runs one MPC episode on the simultaneous formulation, solving the horizon
/// problem at every step, applying the first controls to the true dynamics
/// and warm-starting the next solve from the shifted solution.
pub fn run_mpc_episode<T: Scalar>(
    params: &ChauffeurParams<T>,
    mode: InstabilityMode,
    opts: &IpOptions<T>,
) -> EpisodeLog<T> {
    let mut x_p = params.x_p0;
    let mut x_e = params.x_e0;
    let mut warm: Option<PrimalDualPoint<T>> = None;
    let mut prev_controls = (T::zero(), [T::zero(); 2]);
    let mut steps = Vec::with_capacity(params.n_steps);
    let mut cost_sum = T::zero();
    for t in 0..params.n_steps {
        let problem = SimultaneousProblem::new(*params, x_p, x_e);
        let z0 = warm.take().unwrap_or_else(|| {
            let (px, py) = problem.initial_primal();
            PrimalDualPoint::cold_start(&problem, &px, &py)
        });
        let mut step_opts = opts.clone();
        step_opts.newton.enforce_instability = mode.active_at(t);
        let r = ip_solve(&problem, Some(z0), &step_opts);
        let (u, d) = if r.status.converged() {
            SimultaneousProblem::<T>::first_controls(&r.z.x, &r.z.y)
        } else {
            // solver failure: hold the previous control and keep going
            prev_controls
        };
        prev_controls = (u, d);
        // a failed solve would poison the shift; restart cold instead
        warm = r.status.converged().then(|| shift_warm_start(&r.z, params.horizon));

        let x_p_next = pursuer_step(&x_p, u, params.v);
        let x_e_next = evader_step(&x_e, &d);
        let r1 = x_p_next[0] - x_e_next[0];
        let r2 = x_p_next[1] - x_e_next[1];
        let stage_cost = r1 * r1 + r2 * r2 + params.gamma_u * u * u
            - params.gamma_d * (d[0] * d[0] + d[1] * d[1]);
        cost_sum += stage_cost;
        steps.push(EpisodeStep {
            t,
            x_p,
            x_e,
            u,
            d,
            stage_cost,
            status: r.status,
            iters: r.iters,
            singular: r.singular_hessian,
        });
        x_p = x_p_next;
        x_e = x_e_next;
    }
    let mean_cost = cost_sum / T::cast(params.n_steps as f64);
    EpisodeLog { steps, mean_cost }
}

#[derive(Debug, Clone)]
pub struct ScalingRow {
    pub mode: Formulation,
    pub horizon: usize,
    pub kkt_dim: usize,
    pub status: SolveStatus,
    pub iters: usize,
    pub solve_seconds: f64,
    pub seconds_per_iter: f64,
    /// Structural nonzeros of the L factor (unit diagonal included).
    pub factor_nnz: usize,
}

/// Structural fill of the factor under the same storage rules the solver
/// applies: dense below dimension 64 or at >= 25% density, sparse with the
/// minimum-degree ordering otherwise.
fn structural_factor_nnz<T: Scalar>(p: &dyn MinmaxProblem<T>) -> usize {
    use crate::problem::kkt::{assemble_scaled_kkt, Modification};
    let dims = p.dims();
    // the pattern does not depend on variable values
    let z = PrimalDualPoint::cold_start(p, &vec![T::zero(); dims.n_x], &vec![T::zero(); dims.n_y]);
    let k = assemble_scaled_kkt(p, &z, T::one(), Modification::zero()).expect("assembly");
    match k.jzz.pattern() {
        Some(pattern) if pattern.dim() >= 64 && pattern.density() < 0.25 => {
            let symbolic = crate::factorization::symbolic_analyze(pattern);
            symbolic.l_nnz_strict() + pattern.dim()
        }
        _ => {
            let n = k.jzz.dim();
            n * (n + 1) / 2
        }
    }
}

/// Solves one horizon problem per (mode, T) cell and records iteration count,
/// wall time per iteration and the structural factor fill.
pub fn scaling_study<T: Scalar>(
    params: &ChauffeurParams<T>,
    horizons: &[usize],
    modes: &[Formulation],
    opts: &IpOptions<T>,
) -> Vec<ScalingRow> {
    let mut rows = Vec::new();
    for &mode in modes {
        for &t in horizons {
            let mut p = *params;
            p.horizon = t;
            let problem = build_horizon_problem(&p, p.x_p0, p.x_e0, mode);
            let factor_nnz = structural_factor_nnz(problem.as_ref());
            let kkt_dim = problem.dims().z_dim();
            let start = Instant::now();
            let r = match mode {
                Formulation::Simultaneous => {
                    let sp = SimultaneousProblem::new(p, p.x_p0, p.x_e0);
                    let (px, py) = sp.initial_primal();
                    ip_solve(
                        problem.as_ref(),
                        Some(PrimalDualPoint::cold_start(problem.as_ref(), &px, &py)),
                        opts,
                    )
                }
                Formulation::Sequential => ip_solve(problem.as_ref(), None, opts),
            };
            let solve_seconds = start.elapsed().as_secs_f64();
            rows.push(ScalingRow {
                mode,
                horizon: t,
                kkt_dim,
                status: r.status,
                iters: r.iters,
                solve_seconds,
                seconds_per_iter: solve_seconds / r.iters.max(1) as f64,
                factor_nnz,
            });
        }
    }
    rows
}

pub fn write_episode_csv<T: Scalar>(path: &Path, log: &EpisodeLog<T>) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "t,xp1,xp2,xp3,xe1,xe2,u,d1,d2,stage_cost,status,iters,singular")?;
    for s in &log.steps {
        writeln!(
            f,
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{},{},{}",
            s.t,
            s.x_p[0],
            s.x_p[1],
            s.x_p[2],
            s.x_e[0],
            s.x_e[1],
            s.u,
            s.d[0],
            s.d[1],
            s.stage_cost,
            s.status,
            s.iters,
            s.singular as u8
        )?;
    }
    Ok(())
}

pub fn write_scaling_csv(path: &Path, rows: &[ScalingRow]) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(
        f,
        "mode,horizon,kkt_dim,status,iters,solve_seconds,seconds_per_iter,factor_nnz"
    )?;
    for r in rows {
        writeln!(
            f,
            "{},{},{},{},{},{:.6},{:.9},{}",
            r.mode,
            r.horizon,
            r.kkt_dim,
            r.status,
            r.iters,
            r.solve_seconds,
            r.seconds_per_iter,
            r.factor_nnz
        )?;
    }
    Ok(())
}

/// Renders the pursuer and evader trajectories as a standalone SVG.
pub fn write_episode_svg<T: Scalar>(path: &Path, log: &EpisodeLog<T>) -> std::io::Result<()> {
    let pts_p: Vec<(f64, f64)> = log
        .steps
        .iter()
        .map(|s| (s.x_p[0].to_f64(), s.x_p[1].to_f64()))
        .collect();
    let pts_e: Vec<(f64, f64)> = log
        .steps
        .iter()
        .map(|s| (s.x_e[0].to_f64(), s.x_e[1].to_f64()))
        .collect();
    let all = pts_p.iter().chain(&pts_e);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-9);
    let (w, margin) = (600.0, 40.0);
    let scale = (w - 2.0 * margin) / span;
    let map = |(x, y): (f64, f64)| -> (f64, f64) {
        (margin + (x - x0) * scale, w - margin - (y - y0) * scale)
    };
    let polyline = |pts: &[(f64, f64)], color: &str| -> String {
        let coords: Vec<String> = pts
            .iter()
            .map(|&p| {
                let (x, y) = map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        format!(
            "  <polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            coords.join(" ")
        )
    };
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {w}\">\n"
    ));
    svg.push_str(&polyline(&pts_p, "#1f77b4"));
    svg.push_str(&polyline(&pts_e, "#d62728"));
    for (pts, color) in [(&pts_p, "#1f77b4"), (&pts_e, "#d62728")] {
        if let Some(&first) = pts.first() {
            let (x, y) = map(first);
            svg.push_str(&format!(
                "  <circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"5\" fill=\"{color}\"/>\n"
            ));
        }
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg)
}

#[cfg(test)]
mod tests;
