//! Auditing a flow against the evolution variational inequality: integral
//! characterizations, contraction, slope monotonicity, the a priori
//! estimate suite, and the energy identity.
//!
//! ```bash
//! cargo run --release --example evi_audit
//! ```

use gradflow::evi::{
    contraction_check, ede_edi_residual, energy_identity_check, estimate_suite,
    evi_integral_check, local_evi_check, slope_monotonicity_check, LocalEviConfig,
};
use gradflow::functionals::Quadratic;
use gradflow::harness::quadratic_flow;
use gradflow::resolvent::SolverConfig;
use gradflow::spaces::Euclidean;
use nalgebra::{DMatrix, DVector};

fn main() {
    let space = Euclidean::new(1);
    let f = Quadratic::scalar(1.0, 0.0);
    let flow = quadratic_flow(DMatrix::from_element(1, 1, 1.0), DVector::zeros(1));

    let traj = flow.sample(&vec![1.0], 0.0, 1.0, 1000);
    let probes = vec![vec![0.0], vec![0.5], vec![-1.0]];

    println!("{}", evi_integral_check(&space, &f, &traj, 1.0, &probes));
    println!("{}", slope_monotonicity_check(&space, &f, &traj, 1.0, 1e-10));
    println!("{}", estimate_suite(&space, &f, &traj, 1.0, &vec![0.0], 32, &SolverConfig::default()));

    // contraction between two flows is exact for this energy
    let other = flow.sample(&vec![2.0], 0.0, 1.0, 1000);
    println!("{}", contraction_check(&space, &traj, &other, 1.0, 1e-10));

    // the three faces of the dissipation identity agree along the flow
    let indices: Vec<usize> = (100..1000).step_by(100).collect();
    println!("{}", energy_identity_check(&space, &f, &traj, &indices, 1e-4));
    let (edi, ede) = ede_edi_residual(&space, &f, &traj, 0.0, 0.0, 1e-6);
    println!("{edi}");
    println!("{ede}");

    // local characterization along a geodesic toward the minimizer
    let local = local_evi_check(
        &space,
        &f,
        &traj,
        100,
        &[vec![0.0]],
        &LocalEviConfig { tol: 5e-3, ..LocalEviConfig::default() },
    );
    println!("{local}");
}
