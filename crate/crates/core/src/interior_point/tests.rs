use super::*;
use crate::bench::builtin_problem;
use crate::problem::{Dims, Multipliers, TripletSink};

/// min x^2 subject to x >= 1, as slack form F(x) = 1 - x <= 0.
struct MinQuadBound;

impl MinmaxProblem<f64> for MinQuadBound {
    fn dims(&self) -> Dims {
        Dims { n_x: 1, n_y: 0, l_x: 0, l_y: 0, m_x: 1, m_y: 0 }
    }

    fn objective(&self, x: &[f64], _y: &[f64]) -> f64 {
        x[0] * x[0]
    }

    fn grad_x(&self, x: &[f64], _y: &[f64], g: &mut [f64]) {
        g[0] = 2.0 * x[0];
    }

    fn grad_y(&self, _x: &[f64], _y: &[f64], _g: &mut [f64]) {}

    fn ineq_x(&self, x: &[f64], out: &mut [f64]) {
        out[0] = 1.0 - x[0];
    }

    fn jac_ineq_x(&self, _x: &[f64], sink: &mut TripletSink<f64>) {
        sink.push(0, 0, -1.0);
    }

    fn lag_hess_xx(&self, _x: &[f64], _y: &[f64], _m: &Multipliers<'_, f64>, s: &mut TripletSink<f64>) {
        s.push(0, 0, 2.0);
    }
}

/// Exact central-path point of the constrained fixture at barrier b.
fn fixture_central_point(b: f64) -> PrimalDualPoint<f64> {
    let p = builtin_problem::<f64>("constrained_fixture").unwrap();
    let mut z = PrimalDualPoint::zeros(p.dims());
    // x side: 2x = lam, lam s = b, s = x - 1  =>  2x(x-1) = b
    let x = 0.5 * (1.0 + (1.0 + 2.0 * b).sqrt());
    z.x = vec![x];
    z.s_x = vec![x - 1.0];
    z.lam_x = vec![2.0 * x];
    // y side: -2y = lam_y, lam_y s_y = b, s_y = 0.5 - y  =>  2y^2 - y - b = 0
    let y = 0.25 * (1.0 - (1.0 + 8.0 * b).sqrt());
    z.y = vec![y];
    z.s_y = vec![0.5 - y];
    z.lam_y = vec![-2.0 * y];
    z
}

#[test]
fn fraction_to_boundary_examples() {
    let p = builtin_problem::<f64>("constrained_fixture").unwrap();
    let z = PrimalDualPoint::cold_start(p.as_ref(), &[2.0], &[0.0]);
    let n = z.dims_of().z_dim();
    // all directions nonnegative on the (s, lam) blocks: full step
    assert_eq!(fraction_to_boundary(&z, &vec![1.0; n], 0.995), 1.0);
    // s = 1 with ds = -2 caps the step at 0.5, scaled by tau
    let l = ZLayout::new(z.dims_of());
    let mut d = vec![0.0; n];
    d[l.s_x] = -2.0;
    let mut z1 = z.clone();
    z1.s_x[0] = 1.0;
    assert!((fraction_to_boundary(&z1, &d, 0.995) - 0.4975).abs() < 1e-15);
}

#[test]
fn constrained_selection_zero_near_solution() {
    let p = builtin_problem::<f64>("constrained_fixture").unwrap();
    let z = fixture_central_point(1e-3);
    let k = assemble_scaled_kkt(p.as_ref(), &z, 1e-3, Modification::zero()).unwrap();
    let sel = select_epsilons_constrained(&k, &IpOptions::default()).unwrap();
    assert_eq!(sel.modification, Modification::zero());
}

#[test]
fn constrained_selection_degenerates_to_cubic_rule() {
    // n_y = 0 minimization of x^3 - 3x at x < 0 requires eps_x > -6x
    let p = builtin_problem::<f64>("cubic_min").unwrap();
    let x = -2.0;
    let z = PrimalDualPoint::cold_start(p.as_ref(), &[x], &[]);
    let k = assemble_scaled_kkt(p.as_ref(), &z, 0.0, Modification::zero()).unwrap();
    let sel = select_epsilons_constrained(&k, &IpOptions::default()).unwrap();
    assert!(sel.modification.eps_x > -6.0 * x, "eps_x = {}", sel.modification.eps_x);
}

#[test]
fn ip_step_fixed_point_at_central_path() {
    let p = builtin_problem::<f64>("constrained_fixture").unwrap();
    let b = 1e-2;
    let z = fixture_central_point(b);
    let g = crate::problem::kkt::assemble_residual(p.as_ref(), &z, b).unwrap();
    assert!(inf_norm(&g) < 1e-14, "central point residual {:?}", g);
    let (zn, alpha) = ip_step(p.as_ref(), &z, b, Modification::zero(), 0.995).unwrap();
    assert!(alpha > 0.0);
    for (a, b) in zn.to_vec().iter().zip(z.to_vec()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn ip_step_reduces_residual_on_minimization_fixture() {
    let p = MinQuadBound;
    let mut z = PrimalDualPoint::zeros(p.dims());
    z.x = vec![2.0];
    z.s_x = vec![1.0];
    z.lam_x = vec![1.0];
    let b = 1.0;
    let g0 = crate::problem::kkt::assemble_residual(&p, &z, b).unwrap();
    let (zn, _) = ip_step(&p, &z, b, Modification::zero(), 0.995).unwrap();
    let g1 = crate::problem::kkt::assemble_residual(&p, &zn, b).unwrap();
    assert!(inf_norm(&g1) < inf_norm(&g0), "{} vs {}", inf_norm(&g1), inf_norm(&g0));
}

#[test]
fn minimization_kkt_matrix_matches_hand_blocks() {
    // n_y = 0 layout: J = [[hess, 0, dF], [0, lam/s, 1], [dF', 1, 0]]
    let p = MinQuadBound;
    let mut z = PrimalDualPoint::zeros(p.dims());
    z.x = vec![2.0];
    z.s_x = vec![0.5];
    z.lam_x = vec![1.5];
    let k = assemble_scaled_kkt(&p, &z, 0.5, Modification::zero()).unwrap();
    let expect = [
        [2.0, 0.0, -1.0],
        [0.0, 3.0, 1.0],
        [-1.0, 1.0, 0.0],
    ];
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(k.jzz.get(i, j), expect[i][j], "({i},{j})");
        }
    }
}

#[test]
fn ip_solve_reaches_fixture_solution() {
    let p = builtin_problem::<f64>("constrained_fixture").unwrap();
    let r = ip_solve_from(p.as_ref(), &[2.0], &[0.2], &IpOptions::default());
    assert_eq!(r.status, SolveStatus::LocalMinmax, "{:?} {:?}", r.status, r.failure);
    assert!(r.iters <= 200, "iters {}", r.iters);
    assert!(r.b <= 1e-9 * (1.0 + 1e-6));
    assert!(r.gnorm <= 1e-5);
    assert!((r.z.x[0] - 1.0).abs() < 1e-4, "x = {}", r.z.x[0]);
    assert!(r.z.y[0].abs() < 1e-4, "y = {}", r.z.y[0]);
    // hand KKT multipliers: the active bound carries lam_x -> 2, the
    // inactive one lam_y -> 0
    assert!((r.z.lam_x[0] - 2.0).abs() < 1e-3, "lam_x = {}", r.z.lam_x[0]);
    assert!(r.z.lam_y[0] < 1e-6, "lam_y = {}", r.z.lam_y[0]);
}

#[test]
fn ip_solve_minimization_with_active_bound() {
    let r = ip_solve_from(&MinQuadBound, &[3.0], &[], &IpOptions::default());
    assert_eq!(r.status, SolveStatus::LocalMinmax, "{:?}", r.failure);
    assert!((r.z.x[0] - 1.0).abs() < 1e-4);
    assert!((r.z.lam_x[0] - 2.0).abs() < 1e-3);
}

#[test]
fn infeasible_start_is_rejected() {
    let p = builtin_problem::<f64>("constrained_fixture").unwrap();
    let mut z = PrimalDualPoint::cold_start(p.as_ref(), &[2.0], &[0.0]);
    z.s_x[0] = -1.0;
    let r = ip_solve(p.as_ref(), Some(z), &IpOptions::default());
    assert_eq!(r.status, SolveStatus::InfeasibleStart);

    // wrong shape
    let bad = PrimalDualPoint::zeros(Dims::unconstrained(2, 2));
    let r = ip_solve(p.as_ref(), Some(bad), &IpOptions::default());
    assert_eq!(r.status, SolveStatus::InfeasibleStart);
}

#[test]
fn barrier_monotone_and_positivity_preserved() {
    let p = builtin_problem::<f64>("constrained_fixture").unwrap();
    let mut opts = IpOptions::default();
    opts.newton.keep_trace = true;
    let r = ip_solve_from(p.as_ref(), &[2.0], &[0.2], &opts);
    let trace = r.trace.as_ref().unwrap();
    for w in trace.windows(2) {
        assert!(w[1].b <= w[0].b, "barrier increased");
    }
    for row in trace {
        assert!(row.alpha > 0.0 && row.alpha <= 1.0);
    }
    assert!(r.z.strictly_feasible());
}

#[test]
fn unconstrained_problem_skips_barrier() {
    let p = builtin_problem::<f64>("f1").unwrap();
    let r = ip_solve_from(p.as_ref(), &[1.0], &[1.0], &IpOptions::default());
    assert_eq!(r.status, SolveStatus::LocalMinmax);
    assert_eq!(r.b, 1e-9);
}

