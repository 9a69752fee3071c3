use super::*;
use crate::problem::fd_check::fd_check;
use crate::problem::kkt::{assemble_scaled_kkt, Modification};
use crate::problem::Dims;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn small_params(horizon: usize) -> ChauffeurParams<f64> {
    let mut p = ChauffeurParams::default();
    p.horizon = horizon;
    p
}

#[test]
fn simultaneous_dimension_audit() {
    let t = 7;
    let p = SimultaneousProblem::new(small_params(t), [0.0; 3], [1.0, 0.5]);
    let dims = p.dims();
    assert_eq!(
        dims,
        Dims { n_x: 4 * t, n_y: 4 * t, l_x: 3 * t, l_y: 2 * t, m_x: t, m_y: t }
    );
}

#[test]
fn formulations_agree_on_consistent_point() {
    // T = 1: substituting the trajectory into the simultaneous objective
    // must reproduce the sequential one for any controls
    let params = small_params(1);
    let (u, d) = (0.3, [0.1, -0.05]);
    let p_next = pursuer_step(&params.x_p0, u, params.v);
    let e_next = evader_step(&params.x_e0, &d);
    let sim = SimultaneousProblem::new(params, params.x_p0, params.x_e0);
    let seq = SequentialProblem::new(params, params.x_p0, params.x_e0);
    let x_sim = vec![u, p_next[0], p_next[1], p_next[2]];
    let y_sim = vec![d[0], d[1], e_next[0], e_next[1]];
    let v_sim = sim.objective(&x_sim, &y_sim);
    let v_seq = seq.objective(&[u], &[d[0], d[1]]);
    assert!((v_sim - v_seq).abs() < 1e-14, "{v_sim} vs {v_seq}");

    // and for T = 3 with nontrivial controls
    let params = small_params(3);
    let us = [0.3, -0.2, 0.1];
    let ds = [[0.1, -0.05], [0.0, 0.12], [-0.08, 0.02]];
    let mut p = params.x_p0;
    let mut e = params.x_e0;
    let mut x_sim = Vec::new();
    let mut y_sim = Vec::new();
    for i in 0..3 {
        p = pursuer_step(&p, us[i], params.v);
        e = evader_step(&e, &ds[i]);
        x_sim.extend([us[i], p[0], p[1], p[2]]);
        y_sim.extend([ds[i][0], ds[i][1], e[0], e[1]]);
    }
    let sim = SimultaneousProblem::new(params, params.x_p0, params.x_e0);
    let seq = SequentialProblem::new(params, params.x_p0, params.x_e0);
    let v_sim = sim.objective(&x_sim, &y_sim);
    let v_seq = seq.objective(&us, &ds.concat());
    assert!((v_sim - v_seq).abs() < 1e-13, "{v_sim} vs {v_seq}");
}

#[test]
fn derivatives_pass_fd_check_both_modes() {
    let params = small_params(3);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for mode in [Formulation::Simultaneous, Formulation::Sequential] {
        let p = build_horizon_problem(&params, params.x_p0, params.x_e0, mode);
        let dims = p.dims();
        let mut z = crate::problem::PrimalDualPoint::zeros(dims);
        let mut fill = |v: &mut Vec<f64>, lo: f64, hi: f64| {
            v.iter_mut().for_each(|e| *e = rng.gen_range(lo..hi));
        };
        fill(&mut z.x, -0.4, 0.4);
        fill(&mut z.y, -0.4, 0.4);
        fill(&mut z.s_x, 0.3, 1.2);
        fill(&mut z.s_y, 0.3, 1.2);
        fill(&mut z.nu_x, -0.8, 0.8);
        fill(&mut z.nu_y, -0.8, 0.8);
        fill(&mut z.lam_x, 0.2, 1.0);
        fill(&mut z.lam_y, 0.2, 1.0);
        let r = fd_check(p.as_ref(), &z, 1e-5);
        assert!(r.max_rel_err < 1e-5, "{mode}: worst {:?}", r.worst);
    }
}

#[test]
fn simultaneous_kkt_is_sparse_with_linear_fill() {
    let make = |t: usize| -> usize {
        let p = SimultaneousProblem::new(small_params(t), [0.0; 3], [1.0, 0.5]);
        let (px, py) = p.initial_primal();
        let z = crate::problem::PrimalDualPoint::cold_start(&p, &px, &py);
        let k = assemble_scaled_kkt(&p, &z, 1.0, Modification::zero()).unwrap();
        assert!(k.jzz.is_sparse(), "T = {t} should take the sparse path");
        let pattern = k.jzz.pattern().unwrap();
        let symbolic = crate::factorization::symbolic_analyze(pattern);
        symbolic.l_nnz_strict() + pattern.dim()
    };
    let n20 = make(20);
    let n60 = make(60);
    let ratio = n60 as f64 / n20 as f64;
    assert!(ratio <= 3.5, "fill ratio {ratio} for T 20 -> 60 (nnz {n20} -> {n60})");
}

#[test]
fn episode_dynamics_and_constraints_hold() {
    let mut params = small_params(5);
    params.n_steps = 6;
    let log = run_mpc_episode(&params, InstabilityMode::On, &IpOptions::default());
    assert_eq!(log.steps.len(), 6);
    // bit-level dynamics replay
    for w in log.steps.windows(2) {
        let expect_p = pursuer_step(&w[0].x_p, w[0].u, params.v);
        let expect_e = evader_step(&w[0].x_e, &w[0].d);
        assert_eq!(expect_p, w[1].x_p);
        assert_eq!(expect_e, w[1].x_e);
    }
    // control bounds hold at logged solutions
    for s in &log.steps {
        assert!(s.u * s.u <= params.u_max * params.u_max + 1e-6, "u = {}", s.u);
        let dn = s.d[0] * s.d[0] + s.d[1] * s.d[1];
        assert!(dn <= params.d_max * params.d_max + 1e-6, "|d|^2 = {dn}");
    }
}

#[test]
fn warm_start_shift_preserves_shapes_and_positivity() {
    let params = small_params(4);
    let p = SimultaneousProblem::new(params, params.x_p0, params.x_e0);
    let (px, py) = p.initial_primal();
    let z = crate::problem::PrimalDualPoint::cold_start(&p, &px, &py);
    let shifted = shift_warm_start(&z, params.horizon);
    assert_eq!(shifted.dims_of(), p.dims());
    assert!(shifted.strictly_feasible());
    assert_eq!(shifted.lam_x[3], 1.0);
    // stage blocks moved down by one
    assert_eq!(shifted.x[0], z.x[4]);
    assert_eq!(shifted.y[0], z.y[4]);
}

#[test]
fn formulation_equivalence_at_short_horizon() {
    let params = small_params(2);
    let opts = IpOptions::default();
    let sim = SimultaneousProblem::new(params, params.x_p0, params.x_e0);
    let (px, py) = sim.initial_primal();
    let r_sim = crate::interior_point::ip_solve(
        &sim,
        Some(crate::problem::PrimalDualPoint::cold_start(&sim, &px, &py)),
        &opts,
    );
    let seq = SequentialProblem::new(params, params.x_p0, params.x_e0);
    let r_seq = crate::interior_point::ip_solve(&seq, None, &opts);
    assert!(r_sim.status.converged(), "sim: {:?} {:?}", r_sim.status, r_sim.failure);
    assert!(r_seq.status.converged(), "seq: {:?} {:?}", r_seq.status, r_seq.failure);
    if r_sim.status == SolveStatus::LocalMinmax && r_seq.status == SolveStatus::LocalMinmax {
        let (u1, d1) = SimultaneousProblem::<f64>::first_controls(&r_sim.z.x, &r_sim.z.y);
        let (u2, d2) = SequentialProblem::<f64>::first_controls(&r_seq.z.x, &r_seq.z.y);
        assert!((u1 - u2).abs() < 1e-4, "u: {u1} vs {u2}");
        assert!((d1[0] - d2[0]).abs() < 1e-4 && (d1[1] - d2[1]).abs() < 1e-4);
    }
}

#[test]
fn csv_and_svg_emission() {
    let mut params = small_params(3);
    params.n_steps = 3;
    let log = run_mpc_episode(&params, InstabilityMode::After(1), &IpOptions::default());
    let dir = tempfile::tempdir().unwrap();
    let ep = dir.path().join("episode.csv");
    write_episode_csv(&ep, &log).unwrap();
    let body = std::fs::read_to_string(&ep).unwrap();
    assert_eq!(body.lines().count(), 4);
    let svg = dir.path().join("episode.svg");
    write_episode_svg(&svg, &log).unwrap();
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<svg"));

    let rows = scaling_study(
        &small_params(2),
        &[2, 3],
        &[Formulation::Simultaneous, Formulation::Sequential],
        &IpOptions::default(),
    );
    assert_eq!(rows.len(), 4);
    let sc = dir.path().join("scaling.csv");
    write_scaling_csv(&sc, &rows).unwrap();
    assert_eq!(std::fs::read_to_string(&sc).unwrap().lines().count(), 5);
}

