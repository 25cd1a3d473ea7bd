//! Geometric auditors: approximate intermediate points, the dyadic chain
//! construction, convexity along geodesics, and energy lower bounds.
//!
//! ```bash
//! cargo run --release --example geometry_checks
//! ```

use gradflow::functionals::{Quadratic, QuantileEntropy};
use gradflow::geometry::{
    check_intermediate, dyadic_chain, lambda_convexity_check, lower_bound_constants,
    perturbed_intermediate,
};
use gradflow::spaces::{gaussian_quantile, Euclidean, QuantileSpace};
use gradflow::MetricSpace;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let plane = Euclidean::new(2);
    let x0 = vec![0.0, 0.0];
    let x1 = vec![2.0, 0.0];

    // a point passes the (theta, eps) acceptance iff its perpendicular
    // offset from the geodesic stays within the eps budget
    for eps in [0.1, 0.3] {
        let x = perturbed_intermediate(&plane, &x0, &x1, 0.5, eps);
        println!(
            "eps={eps}: perturbed midpoint {:?} accepted: {}",
            x,
            check_intermediate(&plane, &x0, &x1, &x, 0.5, eps)
        );
    }

    // recursive approximate midpoints with budget eps_n = 2^{-n-2}: the
    // chain is Lipschitz with constant d * exp(sum eps_n)
    let schedule = [0.125, 0.0625, 0.03125];
    let oracle = |a: &Vec<f64>, b: &Vec<f64>, level: u32| {
        perturbed_intermediate(&Euclidean::new(2), a, b, 0.5, schedule[(level - 1) as usize])
    };
    let chain = dyadic_chain(&plane, &x0, &x1, 3, &schedule, Some(&oracle));
    println!(
        "\ndyadic chain: {} points, certified Lipschitz bound {:.6}",
        chain.points.len(),
        chain.lipschitz_bound
    );
    let mut worst: f64 = 0.0;
    for a in 0..chain.points.len() {
        for b in a + 1..chain.points.len() {
            let ratio = plane.dist(chain.point_at(a), chain.point_at(b))
                / (chain.parameter(b) - chain.parameter(a));
            worst = worst.max(ratio);
        }
    }
    println!("worst pairwise ratio: {worst:.6}");

    // entropy is displacement convex: chords dominate along Wasserstein
    // geodesics between Gaussians
    let m = 128;
    let qspace = QuantileSpace::new(m);
    let grid: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
    let report = lambda_convexity_check(
        &QuantileEntropy,
        &qspace,
        &gaussian_quantile(-1.0, 1.0, m),
        &gaussian_quantile(1.0, 0.25, m),
        &grid,
        0.0,
    );
    println!("\nentropy displacement convexity:\n{report}");

    // lower-bound constants of x^2/2 around the origin
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let quad = Quadratic::scalar(1.0, 0.0);
    let e1 = Euclidean::new(1);
    let (constants, audit) = lower_bound_constants(&quad, &e1, &vec![0.0], 1.0, 0.0, &mut rng);
    println!(
        "unit-ball infimum {:.4}, linear weight {:.4}, offsets {:.4} / {:.4}",
        constants.m_o, constants.ell_o, constants.phi_o_quad, constants.phi_o_lin
    );
    println!("{audit}");
}
