use minmax_core::chauffeur::*;
use minmax_core::interior_point::*;
use minmax_core::problem::PrimalDualPoint;

#[test]
#[ignore]
fn probe_sparse_solve() {
    let mut params = ChauffeurParams::<f64>::default();
    params.horizon = 20;
    let sim = SimultaneousProblem::new(params, params.x_p0, params.x_e0);
    let (px, py) = sim.initial_primal();
    let mut opts = IpOptions::default();
    opts.newton.keep_trace = true;
    opts.newton.max_iters = 1500;
    let r = ip_solve(&sim, Some(PrimalDualPoint::cold_start(&sim, &px, &py)), &opts);
    println!("status {:?} fail {:?} iters {} gnorm {:e}", r.status, r.failure, r.iters, r.gnorm);
    if let Some(t) = &r.trace {
        for row in t.iter().step_by(40) {
            println!("it {} b {:e} g {:e} a {} ex {:e} ey {:e}", row.iter, row.b, row.gnorm, row.alpha, row.eps_x, row.eps_y);
        }
    }
}
