//! The two concrete spaces: flat Euclidean coordinates and the 1D
//! Wasserstein space of monotone quantile vectors.
//!
//! ```bash
//! cargo run --release --example spaces_tour
//! ```

use gradflow::spaces::{gaussian_quantile, Euclidean, QuantileSpace};
use gradflow::MetricSpace;

fn main() {
    let plane = Euclidean::new(2);
    let a = vec![0.0, 0.0];
    let b = vec![3.0, 4.0];
    println!("euclidean distance (0,0)-(3,4): {}", plane.dist(&a, &b));
    println!("midpoint: {:?}", plane.intermediate(&a, &b, 0.5));

    // measures are stored through their quantile functions on the midpoint
    // grid; the L2 distance of quantiles is the quadratic Wasserstein
    // distance of the measures
    let m = 256;
    let space = QuantileSpace::new(m);
    let std_normal = gaussian_quantile(0.0, 1.0, m);
    let shifted = gaussian_quantile(2.0, 1.0, m);
    println!("W2(N(0,1), N(2,1)) on M={m}: {}", space.dist(&std_normal, &shifted));

    // displacement interpolation of Gaussians stays Gaussian
    let mid = space.intermediate(&std_normal, &shifted, 0.5);
    println!(
        "interpolant at 1/2: mean {:.6}, variance {:.6} (expect 1, 1)",
        mid.mean(),
        mid.variance()
    );

    // geodesics are exact: distance grows linearly in the parameter
    for theta in [0.25, 0.5, 0.75] {
        let q = space.intermediate(&std_normal, &shifted, theta);
        println!(
            "theta={theta}: d(start, q) = {:.6} = theta * {:.6}",
            space.dist(&std_normal, &q),
            space.dist(&std_normal, &shifted)
        );
    }
}
