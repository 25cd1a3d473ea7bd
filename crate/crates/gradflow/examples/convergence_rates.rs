//! Convergence studies and the two uniform error bounds: first order for
//! the quadratic energy, half-order guaranteed for finite-slope data, and
//! the quarter-order bound from an infinite-slope start.
//!
//! ```bash
//! cargo run --release --example convergence_rates
//! ```

use gradflow::functionals::NegSqrt;
use gradflow::functionals::Quadratic;
use gradflow::harness::{
    bound_audit_domain, bound_audit_regular, convergence_study, neg_sqrt_flow, quadratic_flow,
};
use gradflow::resolvent::SolverConfig;
use gradflow::spaces::Euclidean;
use nalgebra::{DMatrix, DVector};

fn main() {
    let space = Euclidean::new(1);
    let cfg = SolverConfig::default();

    let f = Quadratic::scalar(1.0, 0.0);
    let flow = quadratic_flow(DMatrix::from_element(1, 1, 1.0), DVector::zeros(1));
    let n_list: Vec<usize> = (2..=12).map(|k| 1 << k).collect();
    let mut table =
        convergence_study(&space, &f, &flow, &vec![1.0], 1.0, &n_list, 0.0, None, &cfg).unwrap();
    let regular = bound_audit_regular(&mut table, 0.0, 1.0);
    println!("quadratic study, fitted order {:.4}", table.fitted_order);
    println!("   n      tau        node_err     uniform_err  bound_rhs");
    for row in &table.rows {
        println!(
            "{:5}  {:.6}  {:.6e}  {:.6e}  {:.6e}",
            row.n, row.tau, row.node_sup, row.sup_error, row.bound_rhs
        );
    }
    println!("finite-slope bound audit pass: {}\n", regular.pass);

    // -sqrt(x) from x = 0: the slope is infinite, only the energy is
    // finite, and the quarter-order bound with the Moreau-Yosida gap of
    // the start still controls the error
    let g = NegSqrt;
    let gflow = neg_sqrt_flow();
    let n_list: Vec<usize> = (3..=10).map(|k| 1 << k).collect();
    let mut table =
        convergence_study(&space, &g, &gflow, &vec![0.0], 0.5, &n_list, 0.0, None, &cfg).unwrap();
    let domain = bound_audit_domain(&mut table, &g, &space, &vec![0.0], 0.0, 0.0, &cfg);
    println!("-sqrt study from the domain boundary, fitted order {:.4}", table.fitted_order);
    for row in &table.rows {
        println!(
            "{:5}  {:.6}  err {:.6e}  quarter-order bound {:.6e}",
            row.n, row.tau, row.sup_error, row.bound_rhs
        );
    }
    println!("domain-data bound audit pass: {}", domain.pass);
}
