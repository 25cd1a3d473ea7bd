//! Moreau-Yosida values, metric slopes, and the duality between the two:
//! `(1 + lambda tau)(phi(x) - phi_tau(x))/tau` is bounded by half the
//! squared slope and reaches it as the step vanishes.
//!
//! ```bash
//! cargo run --release --example moreau_yosida
//! ```

use gradflow::functionals::{
    duality_slope_check, global_slope, metric_slope, moreau_yosida_value, AbsNorm, Quadratic,
};
use gradflow::resolvent::SolverConfig;
use gradflow::spaces::Euclidean;

fn main() {
    let space = Euclidean::new(1);
    let cfg = SolverConfig::default();

    let quad = Quadratic::scalar(1.0, 0.0);
    let x = vec![1.0];
    println!("quadratic x^2/2 at x = 1:");
    for tau in [1.0, 0.5, 0.1, 0.01] {
        let v = moreau_yosida_value(&quad, &space, tau, &x, &cfg);
        println!("  phi_tau({tau:>4}) = {v:.8}   (closed form {:.8})", 0.5 / (1.0 + tau));
    }
    println!("  slope = {}", metric_slope(&quad, &space, &x));

    // the weighted l1 norm: Huber-type regularization, slope jumps at 0
    let abs = AbsNorm::new(1.0);
    println!("|x| at x = 1: phi_0.5 = {} (Huber: |x| - tau/2)", moreau_yosida_value(&abs, &space, 0.5, &x, &cfg));
    println!("|.|-slope at 0: {}", metric_slope(&abs, &space, &vec![0.0]));
    println!("|.|-slope at 1: {}", metric_slope(&abs, &space, &vec![1.0]));

    // probed global slope at the convexity modulus certifies the slope
    let probes: Vec<Vec<f64>> = (-300..=300).map(|i| vec![i as f64 * 0.01]).collect();
    println!(
        "global 1-slope of x^2/2 at x = 2 over {} probes: {}",
        probes.len(),
        global_slope(&quad, &space, 1.0, &vec![2.0], &probes)
    );

    let report = duality_slope_check(&quad, &space, 1.0, &x, &[1.0, 0.5, 0.1, 0.01], 1e-8, &cfg);
    println!("\nduality audit:\n{report}");
}
