use super::*;
use crate::problem::kkt::assemble_scaled_kkt;
use crate::problem::PrimalDualPoint;

#[test]
fn builtin_derivative_spot_values() {
    // f1 at (0, 0): zero gradient, Hessian [[4, 4], [4, -2]]
    let p = builtin_problem::<f64>("f1").unwrap();
    let z = PrimalDualPoint::cold_start(p.as_ref(), &[0.0], &[0.0]);
    let k = assemble_scaled_kkt(p.as_ref(), &z, 0.0, Modification::zero()).unwrap();
    assert_eq!(k.g, vec![0.0, 0.0]);
    assert_eq!(k.jzz.get(0, 0), 4.0);
    assert_eq!(k.jzz.get(1, 0), 4.0);
    assert_eq!(k.jzz.get(1, 1), -2.0);

    // f4 gradient is (y, x)
    let p = builtin_problem::<f64>("f4").unwrap();
    let mut g = [0.0];
    p.grad_x(&[2.0], &[-7.0], &mut g);
    assert_eq!(g[0], -7.0);
    p.grad_y(&[2.0], &[-7.0], &mut g);
    assert_eq!(g[0], 2.0);

    // f2 vanishes at the origin
    let p = builtin_problem::<f64>("f2").unwrap();
    assert_eq!(p.objective(&[0.0], &[0.0]), 0.0);

    assert!(builtin_problem::<f64>("nosuch").is_err());
}

#[test]
fn certification_passes() {
    let report = certify_counterexamples().unwrap();
    assert!((report.attractive_eigenvalues[1].0 - 6.0 / 11.0).abs() < 1e-12);
    assert!(report.selected_radius > 1.0);
    let modulus = {
        let (re, im) = report.repelled_eigenvalues[0];
        (re * re + im * im).sqrt()
    };
    assert!((modulus - 4.5f64.sqrt()).abs() < 1e-12);
}

#[test]
fn small_benchmark_is_sound_and_deterministic() {
    let mut cfg = BenchConfig::<f64>::default();
    cfg.n_trials = 25;
    cfg.seed = 7;
    let out1 = run_benchmark(&cfg).unwrap();
    let out2 = run_benchmark(&cfg).unwrap();
    assert_eq!(out1.summary, out2.summary);

    // the k-th trial of every solver starts at the same point
    for f in &cfg.functions {
        let per_solver: Vec<Vec<&TrialResult<f64>>> = cfg
            .solvers
            .iter()
            .map(|s| {
                out1.trials
                    .iter()
                    .filter(|t| &t.function == f && t.solver == *s)
                    .collect()
            })
            .collect();
        for k in 0..cfg.n_trials {
            for w in per_solver.windows(2) {
                assert_eq!(w[0][k].init_x, w[1][k].init_x);
                assert_eq!(w[0][k].init_y, w[1][k].init_y);
            }
        }
    }

    // headline soundness: the modified algorithm never converges to an
    // equilibrium that is not counted as a local minmax
    for row in out1.summary.iter().filter(|r| r.solver == SolverId::Alg1) {
        assert_eq!(row.eq, row.minmax, "{}", row.function);
    }

    // pure Newton on f1 converges everywhere to the unique local minmax
    let f1_newton = out1
        .summary
        .iter()
        .find(|r| r.function == "f1" && r.solver == SolverId::PureNewton)
        .unwrap();
    assert_eq!(f1_newton.eq, cfg.n_trials);
    assert_eq!(f1_newton.minmax, cfg.n_trials);

    // GDA never converges on the bilinear saddle
    let f4_gda = out1
        .summary
        .iter()
        .find(|r| r.function == "f4" && r.solver == SolverId::Gda)
        .unwrap();
    assert_eq!(f4_gda.eq, 0);
    assert!(f4_gda.mean_iters.is_none());
}

#[test]
fn csv_emission_round_trip() {
    let mut cfg = BenchConfig::<f64>::default();
    cfg.n_trials = 4;
    cfg.functions = vec!["f4".into()];
    cfg.solvers = vec![SolverId::PureNewton];
    let out = run_benchmark(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let trials = dir.path().join("trials.csv");
    let summary = dir.path().join("summary.csv");
    let manifest = dir.path().join("manifest.json");
    write_trials_csv(&trials, &out.trials).unwrap();
    write_summary_csv(&summary, &out.summary).unwrap();
    write_manifest(&manifest, &cfg).unwrap();
    let t = std::fs::read_to_string(&trials).unwrap();
    assert_eq!(t.lines().count(), 5);
    assert!(t.starts_with("trial,function,solver,init_x,init_y,final_x,final_y,status,iters"));
    let s = std::fs::read_to_string(&summary).unwrap();
    assert!(s.contains("f4,pure_newton,4,4,4,1.000"));
    let m = std::fs::read_to_string(&manifest).unwrap();
    assert!(m.contains("\"seed\": 1"));
}
