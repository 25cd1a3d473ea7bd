//! One relaxed proximal step: the two acceptance conditions, the probe
//! net, and the slope bound an accepted step certifies.
//!
//! ```bash
//! cargo run --release --example resolvent_step
//! ```

use gradflow::functionals::Quadratic;
use gradflow::resolvent::{
    check_ekeland_conditions, default_probes, slope_bound_check, solve_resolvent, SolverConfig,
};
use gradflow::spaces::Euclidean;

fn main() {
    let space = Euclidean::new(1);
    let f = Quadratic::scalar(1.0, 0.0);
    let x = vec![1.0];
    let tau = 0.5;

    let exact = solve_resolvent(&f, &space, tau, 0.0, &x, &SolverConfig::default());
    println!(
        "exact step from x=1, tau=0.5: point {:?} (closed form {:.6})",
        exact.point,
        1.0 / 1.5
    );
    println!(
        "penalized objective {:.8}, accepted: near-min {} descent {}",
        exact.objective, exact.accepted_90bis, exact.accepted_90
    );

    // with a relaxation budget eta > 0 slightly-off candidates remain
    // acceptable, up to a radius proportional to eta tau d
    let eta = 0.4;
    let minimizer = exact.point[0];
    for delta in [0.005, 0.02, 0.08] {
        let candidate = vec![minimizer + delta];
        let probes = default_probes(&space, &x, &candidate, 32);
        let (near_min, descent, worst) =
            check_ekeland_conditions(&f, &space, tau, eta, &x, &candidate, &probes);
        println!(
            "candidate offset {delta}: near-min {near_min} descent {descent} worst violation {worst:.3e}"
        );
    }

    // the slope at an accepted point is controlled by the step length
    let report = slope_bound_check(&f, &space, tau, 0.0, &x, &exact);
    println!("\nslope bound:\n{report}");

    // a loose iterative solve still produces an acceptable step
    let loose = SolverConfig { tol: 1e-4, force_iterative: true, ..SolverConfig::default() };
    let inexact = solve_resolvent(&f, &space, tau, eta, &x, &loose);
    println!(
        "iterative step: inner residual {:.2e}, accepted: {} {}",
        inexact.inner_residual, inexact.accepted_90bis, inexact.accepted_90
    );
}
