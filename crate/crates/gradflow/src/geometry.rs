//! Geometric auditors: approximate intermediate points, dyadic chain
//! construction, convexity checks along geodesics, lower-bound constants,
//! and the convexity inequality transported by a flow.

use crate::base::{Functional, MetricSpace};
use crate::report::{AuditReport, AuditSample};
use rand_chacha::ChaCha8Rng;

/// Level-aware approximate-midpoint oracle used by [`dyadic_chain`].
pub type MidpointOracle<'a, P> = &'a dyn Fn(&P, &P, u32) -> P;

/// Acceptance test for a `(theta, eps)`-intermediate point:
/// `d(x0,x)^2/theta + d(x,x1)^2/(1-theta)
///   <= d(x0,x1)^2 (1 + eps^2 theta (1-theta))`, with `1e-12` slack.
pub fn check_intermediate<S: MetricSpace>(
    space: &S,
    x0: &S::Point,
    x1: &S::Point,
    x: &S::Point,
    theta: f64,
    eps: f64,
) -> bool {
    assert!(theta > 0.0 && theta < 1.0, "theta must lie in (0,1)");
    assert!((0.0..1.0).contains(&eps), "eps must lie in [0,1)");
    let d01 = space.dist(x0, x1);
    let d0 = space.dist(x0, x);
    let d1 = space.dist(x, x1);
    d0 * d0 / theta + d1 * d1 / (1.0 - theta)
        <= d01 * d01 * (1.0 + eps * eps * theta * (1.0 - theta)) + 1e-12
}

/// Dyadic chain of approximate midpoints between two endpoints.
#[derive(Debug, Clone)]
pub struct ChainResult<P> {
    /// Points indexed by `k` at parameters `k / 2^levels`.
    pub points: Vec<P>,
    pub levels: u32,
    /// Certified Lipschitz constant: `d(x_a, x_b) <= lipschitz_bound |a - b|`
    /// for all dyadic parameters `a, b`.
    pub lipschitz_bound: f64,
}

impl<P> ChainResult<P> {
    /// The point at dyadic parameter `k / 2^levels`.
    pub fn point_at(&self, k: usize) -> &P {
        &self.points[k]
    }

    pub fn parameter(&self, k: usize) -> f64 {
        k as f64 / (1u64 << self.levels) as f64
    }
}

/// Builds the dyadic chain by recursive midpoint insertion: level `n`
/// inserts `eps_schedule[n - 1]`-midpoints between consecutive points of
/// level `n - 1`. When `midpoint_oracle` is absent the exact geodesic
/// midpoint of the space is used and the chain is an exact geodesic
/// sampling; either way every pair of chain points satisfies the Lipschitz
/// bound `d(x0, x1) * exp(sum eps_n)`.
pub fn dyadic_chain<S: MetricSpace>(
    space: &S,
    x0: &S::Point,
    x1: &S::Point,
    levels: u32,
    eps_schedule: &[f64],
    midpoint_oracle: Option<MidpointOracle<S::Point>>,
) -> ChainResult<S::Point> {
    assert!(levels >= 1, "need at least one level");
    assert_eq!(eps_schedule.len(), levels as usize, "one eps per level");
    assert!(eps_schedule.iter().all(|&e| e > 0.0), "eps must be positive");
    let mut points = vec![x0.clone(), x1.clone()];
    for level in 1..=levels {
        let mut refined = Vec::with_capacity(2 * points.len() - 1);
        for w in points.windows(2) {
            let mid = match midpoint_oracle {
                Some(oracle) => oracle(&w[0], &w[1], level),
                None => space.intermediate(&w[0], &w[1], 0.5),
            };
            refined.push(w[0].clone());
            refined.push(mid);
        }
        refined.push(points.last().unwrap().clone());
        points = refined;
    }
    let factor: f64 = eps_schedule.iter().sum::<f64>();
    ChainResult {
        lipschitz_bound: space.dist(x0, x1) * factor.exp(),
        points,
        levels,
    }
}

/// Audits geodesic `lambda`-convexity along exact intermediate points: for
/// each `theta` the value at `intermediate(x0, x1, theta)` must not exceed
/// the chord corrected by `(lambda/2) theta (1-theta) d^2`.
pub fn lambda_convexity_check<S: MetricSpace, F: Functional<S>>(
    f: &F,
    space: &S,
    x0: &S::Point,
    x1: &S::Point,
    theta_grid: &[f64],
    lambda: f64,
) -> AuditReport {
    let phi0 = f.value(space, x0);
    let phi1 = f.value(space, x1);
    assert!(
        phi0.is_finite() && phi1.is_finite(),
        "endpoints must lie in the domain"
    );
    let d = space.dist(x0, x1);
    let tol = 1e-9 * (1.0 + phi0.abs() + phi1.abs());
    let samples = theta_grid
        .iter()
        .map(|&theta| {
            assert!(theta > 0.0 && theta < 1.0, "theta grid must lie in (0,1)");
            let mid = space.intermediate(x0, x1, theta);
            let chord =
                (1.0 - theta) * phi0 + theta * phi1 - 0.5 * lambda * theta * (1.0 - theta) * d * d;
            AuditSample::new(format!("theta={theta}"), f.value(space, &mid), chord)
        })
        .collect();
    AuditReport::new("lambda-convexity", tol, samples)
}

/// The constants of the quadratic and linear lower bounds derived from
/// approximate `lambda`-convexity.
#[derive(Debug, Clone, Copy)]
pub struct LowerBoundConstants {
    /// Infimum of the energy over the unit ball around the anchor.
    pub m_o: f64,
    /// Quadratic-bound offset: `phi(x) + kappa_o/2 d^2(x,o) >= phi_o_quad`.
    pub phi_o_quad: f64,
    /// Linear-bound weight for `phi - lambda/2 d^2(., o)`.
    pub ell_o: f64,
    /// Linear-bound offset.
    pub phi_o_lin: f64,
}

/// Estimates the unit-ball infimum `m_o` by probing, assembles the
/// quadratic and linear lower-bound constants, and audits both bounds on
/// a wider probe cloud. Probing is deterministic given the seeded RNG.
pub fn lower_bound_constants<S: MetricSpace, F: Functional<S>>(
    f: &F,
    space: &S,
    o: &S::Point,
    lambda: f64,
    kappa_o: f64,
    rng: &mut ChaCha8Rng,
) -> (LowerBoundConstants, AuditReport) {
    assert!(kappa_o > -lambda, "need kappa_o > -lambda");
    let phi_o = f.value(space, o);
    assert!(phi_o.is_finite(), "anchor must lie in the domain");

    // unit-ball probes: 64 directions at 8 radii
    let mut m_o = phi_o;
    let mut cloud = Vec::new();
    for k in 1..=8 {
        let r = k as f64 / 8.0;
        for p in space.sphere_probes(o, r, 64, rng) {
            m_o = m_o.min(f.value(space, &p));
            cloud.push(p);
        }
    }
    // wider cloud for auditing the bounds away from the ball
    for r in [1.5, 2.0, 4.0, 8.0] {
        cloud.extend(space.sphere_probes(o, r, 16, rng));
    }

    let lambda_pos = lambda.max(0.0);
    let lambda_neg = (-lambda).max(0.0);
    let gap = phi_o - m_o + 0.5 * lambda_pos;
    let constants = LowerBoundConstants {
        m_o,
        phi_o_quad: phi_o - gap * gap / (2.0 * (lambda + kappa_o)) - 0.5 * (lambda + kappa_o),
        ell_o: phi_o - m_o + 0.5 * lambda,
        phi_o_lin: m_o - 0.5 * lambda_neg,
    };

    let mut quad = Vec::new();
    let mut lin = Vec::new();
    for (i, p) in cloud.iter().enumerate() {
        let v = f.value(space, p);
        if !v.is_finite() {
            continue;
        }
        let d = space.dist(o, p);
        quad.push(AuditSample::new(
            format!("probe {i}"),
            constants.phi_o_quad,
            v + 0.5 * kappa_o * d * d,
        ));
        lin.push(AuditSample::new(
            format!("probe {i}"),
            constants.phi_o_lin,
            v - 0.5 * lambda * d * d + constants.ell_o * d,
        ));
    }
    let tol = 1e-9 * (1.0 + phi_o.abs() + m_o.abs());
    let report = AuditReport::combine(
        "lower-bounds",
        vec![
            AuditReport::new("lower-bound-quadratic", tol, quad),
            AuditReport::new("lower-bound-linear", tol, lin),
        ],
    );
    (constants, report)
}

/// Audits the convexity inequality transported by a flow: starting the flow
/// at a `(theta, eps)`-intermediate point, for each `t` the inequality
/// holds with modulus weakened to `lambda - eps^2 / E_lambda(t)`.
///
/// The intermediate point is the exact geodesic point plus an optional
/// perpendicular offset sized inside the `eps` budget, which gives
/// reproducible approximate-length behaviour without a search.
#[allow(clippy::too_many_arguments)]
pub fn flowed_convexity_check<S: MetricSpace, F: Functional<S>>(
    flow: &dyn Fn(f64, &S::Point) -> S::Point,
    f: &F,
    space: &S,
    x0: &S::Point,
    x1: &S::Point,
    theta: f64,
    eps: f64,
    t_grid: &[f64],
    lambda: f64,
) -> AuditReport {
    assert!(theta > 0.0 && theta < 1.0);
    assert!((0.0..1.0).contains(&eps));
    assert!(t_grid.iter().all(|&t| t > 0.0), "flow times must be positive");
    let phi0 = f.value(space, x0);
    let phi1 = f.value(space, x1);
    let d = space.dist(x0, x1);

    let start = perturbed_intermediate(space, x0, x1, theta, eps);
    debug_assert!(eps == 0.0 || check_intermediate(space, x0, x1, &start, theta, eps));

    let tol = 1e-8 * (1.0 + phi0.abs() + phi1.abs());
    let samples = t_grid
        .iter()
        .map(|&t| {
            let modulus = lambda - eps * eps / crate::base::exp_primitive(lambda, t);
            let rhs = (1.0 - theta) * phi0 + theta * phi1
                - 0.5 * modulus * theta * (1.0 - theta) * d * d;
            let flowed = flow(t, &start);
            AuditSample::new(format!("t={t}"), f.value(space, &flowed), rhs)
        })
        .collect();
    AuditReport::new("flowed-convexity", tol, samples)
}

/// Exact geodesic point at `theta` displaced orthogonally to the segment by
/// the largest offset the `(theta, eps)` acceptance budget allows.
pub fn perturbed_intermediate<S: MetricSpace>(
    space: &S,
    x0: &S::Point,
    x1: &S::Point,
    theta: f64,
    eps: f64,
) -> S::Point {
    let mid = space.intermediate(x0, x1, theta);
    if eps == 0.0 {
        return mid;
    }
    let d = space.dist(x0, x1);
    // offset delta satisfies delta^2 / (theta (1-theta)) <= eps^2 theta (1-theta) d^2
    let delta = eps * theta * (1.0 - theta) * d * 0.999;
    let c0 = space.coords(x0).to_vec();
    let c1 = space.coords(x1).to_vec();
    let cm = space.coords(&mid).to_vec();
    let dim = cm.len();
    // any unit vector orthogonal to the segment direction; fall back to the
    // segment itself in one dimension, where "perpendicular" is empty
    let seg: Vec<f64> = c1.iter().zip(&c0).map(|(b, a)| b - a).collect();
    let mut perp = vec![0.0; dim];
    if dim == 1 {
        perp[0] = 1.0;
    } else {
        // Gram-Schmidt of a coordinate axis against the segment
        let axis = (0..dim)
            .min_by(|&i, &j| {
                seg[i].abs().partial_cmp(&seg[j].abs()).unwrap()
            })
            .unwrap();
        perp[axis] = 1.0;
        let seg_norm2: f64 = seg.iter().map(|v| v * v).sum();
        if seg_norm2 > 0.0 {
            let proj = seg[axis] / seg_norm2;
            for i in 0..dim {
                perp[i] -= proj * seg[i];
            }
        }
        let norm = perp.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in perp.iter_mut() {
            *v /= norm;
        }
    }
    let w = space.metric_weight().sqrt();
    let coords: Vec<f64> = cm
        .iter()
        .zip(&perp)
        .map(|(c, p)| c + p * delta / w)
        .collect();
    space
        .try_point_from_coords(coords)
        .unwrap_or(mid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{Quadratic, QuantileEntropy};
    use crate::spaces::{gaussian_quantile, Euclidean, QuantileSpace};
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    #[test]
    fn exact_midpoint_is_intermediate() {
        let s = Euclidean::new(2);
        let x0 = vec![0.0, 0.0];
        let x1 = vec![3.0, 4.0];
        let mid = s.intermediate(&x0, &x1, 0.5);
        assert!(check_intermediate(&s, &x0, &x1, &mid, 0.5, 0.5));
        assert!(check_intermediate(&s, &x0, &x1, &mid, 0.5, 0.0));
    }

    #[test]
    fn endpoint_is_not_an_intermediate_point() {
        // x = x1 at theta = 1/2 doubles the left side; the eps budget at
        // eps = 0.5 is only a 1.0625 factor
        let s = Euclidean::new(1);
        let x0 = vec![0.0];
        let x1 = vec![1.0];
        assert!(!check_intermediate(&s, &x0, &x1, &x1, 0.5, 0.5));
    }

    #[test]
    fn perpendicular_offset_threshold() {
        // direct algebra: the midpoint budget admits an offset delta with
        // 4 delta^2 <= d^2 eps^2 / 4
        let s = Euclidean::new(2);
        let x0 = vec![0.0, 0.0];
        let x1 = vec![2.0, 0.0];
        let eps = 0.3;
        let d = 2.0;
        let delta_max = d * eps / 4.0;
        for (factor, expect) in [(0.99, true), (1.01, false)] {
            let x = vec![1.0, factor * delta_max];
            assert_eq!(check_intermediate(&s, &x0, &x1, &x, 0.5, eps), expect);
        }
    }

    #[test]
    fn dyadic_chain_with_exact_midpoints_is_geodesic() {
        let s = Euclidean::new(2);
        let x0 = vec![0.0, 0.0];
        let x1 = vec![3.0, 4.0];
        let chain = dyadic_chain(&s, &x0, &x1, 3, &[0.1, 0.05, 0.025], None);
        assert_eq!(chain.points.len(), 9);
        let d = 5.0;
        for k in 0..=8 {
            let theta = chain.parameter(k);
            assert_relative_eq!(s.dist(&x0, chain.point_at(k)), theta * d, epsilon = 1e-12);
        }
        // exact midpoints: factor-1 Lipschitz bound holds pairwise
        for a in 0..=8 {
            for b in 0..=8 {
                if a != b {
                    let gap = (chain.parameter(a) - chain.parameter(b)).abs();
                    assert!(s.dist(chain.point_at(a), chain.point_at(b)) <= d * gap + 1e-12);
                }
            }
        }
    }

    #[test]
    fn dyadic_chain_level_one_is_triple() {
        let s = Euclidean::new(1);
        let chain = dyadic_chain(&s, &vec![0.0], &vec![1.0], 1, &[0.25], None);
        assert_eq!(chain.points.len(), 3);
        assert_eq!(chain.point_at(1), &vec![0.5]);
    }

    #[test]
    fn dyadic_chain_with_approximate_midpoints_respects_bound() {
        // eps_n = 2^{-n-2}; the oracle displaces each midpoint
        // perpendicular to the segment inside the eps_n budget
        let s = Euclidean::new(2);
        let x0 = vec![0.0, 0.0];
        let x1 = vec![1.0, 0.0];
        let schedule = [0.125, 0.0625, 0.03125];
        let oracle = move |a: &Vec<f64>, b: &Vec<f64>, level: u32| {
            let eps = [0.125, 0.0625, 0.03125][(level - 1) as usize];
            perturbed_intermediate(&Euclidean::new(2), a, b, 0.5, eps)
        };
        let chain = dyadic_chain(&s, &x0, &x1, 3, &schedule, Some(&oracle));
        let expected = s.dist(&x0, &x1) * schedule.iter().sum::<f64>().exp();
        assert_relative_eq!(chain.lipschitz_bound, expected, epsilon = 1e-12);
        // exhaustive pairwise check over the level-3 dyadics
        let n = chain.points.len();
        for a in 0..n {
            for b in a + 1..n {
                let gap = chain.parameter(b) - chain.parameter(a);
                assert!(
                    s.dist(chain.point_at(a), chain.point_at(b))
                        <= chain.lipschitz_bound * gap + 1e-12,
                    "pair ({a},{b})"
                );
            }
        }
    }

    #[test]
    fn quadratic_is_exactly_one_convex() {
        let s = Euclidean::new(1);
        let f = Quadratic::scalar(1.0, 0.0);
        let grid: Vec<f64> = (1..20).map(|i| i as f64 / 20.0).collect();
        let report = lambda_convexity_check(&f, &s, &vec![-1.0], &vec![2.0], &grid, 1.0);
        assert!(report.pass, "{report}");
        // the quadratic identity is exact: all residuals vanish
        assert!(report.max_residual().abs() < 1e-12);
    }

    #[test]
    fn concave_function_fails_convexity_check() {
        struct Concave;
        impl Functional<Euclidean> for Concave {
            fn value_coords(&self, _s: &Euclidean, c: &[f64]) -> f64 {
                -c[0] * c[0]
            }
            fn lambda_hint(&self) -> f64 {
                -2.0
            }
        }
        let s = Euclidean::new(1);
        let report =
            lambda_convexity_check(&Concave, &s, &vec![-1.0], &vec![1.0], &[0.5], 0.0);
        assert!(!report.pass);
    }

    #[test]
    fn entropy_is_displacement_convex() {
        let m = 48;
        let s = QuantileSpace::new(m);
        let a = gaussian_quantile(0.0, 1.0, m);
        let b = gaussian_quantile(2.0, 1.0, m);
        let grid: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
        let report = lambda_convexity_check(&QuantileEntropy, &s, &a, &b, &grid, 0.0);
        assert!(report.pass, "{report}");
    }

    #[test]
    fn passing_at_lambda_implies_passing_at_weaker_lambda() {
        let s = Euclidean::new(1);
        let f = Quadratic::scalar(1.0, 0.0);
        let grid: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
        let strict = lambda_convexity_check(&f, &s, &vec![-1.0], &vec![2.0], &grid, 1.0);
        let weak = lambda_convexity_check(&f, &s, &vec![-1.0], &vec![2.0], &grid, 0.5);
        assert!(strict.pass);
        assert!(weak.pass);
    }

    #[test]
    fn lower_bound_constants_for_quadratic() {
        let s = Euclidean::new(1);
        let f = Quadratic::scalar(1.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (constants, report) = lower_bound_constants(&f, &s, &vec![0.0], 1.0, 0.0, &mut rng);
        // analytic values: m_o = 0, ell_o = 1/2, linear offset 0
        assert!(constants.m_o.abs() < 1e-3, "m_o = {}", constants.m_o);
        assert_relative_eq!(constants.ell_o, 0.5, epsilon = 1e-3);
        assert!(constants.phi_o_lin.abs() < 1e-3);
        assert!(report.pass, "{report}");
    }

    #[test]
    fn bounded_below_functional_passes_for_any_positive_kappa() {
        let s = Euclidean::new(1);
        let f = crate::functionals::AbsNorm::new(1.0); // bounded below by 0
        for kappa in [0.5, 1.0, 2.0] {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let (_, report) = lower_bound_constants(&f, &s, &vec![0.0], 0.0, kappa, &mut rng);
            assert!(report.pass, "kappa={kappa}: {report}");
        }
    }

    #[test]
    fn flowed_convexity_for_quadratic_closed_form() {
        let s = Euclidean::new(1);
        let f = Quadratic::scalar(1.0, 0.0);
        let flow = |t: f64, p: &Vec<f64>| vec![p[0] * (-t).exp()];
        let t_grid = [0.05, 0.1, 0.5, 1.0, 2.0];
        let report = flowed_convexity_check(
            &flow, &f, &s, &vec![0.0], &vec![2.0], 0.5, 0.0, &t_grid, 1.0,
        );
        assert!(report.pass, "{report}");
        // closed-form substitution: value along the flow is e^{-2t}/2 <= 1/2
        for sample in &report.samples {
            assert!(sample.lhs <= 0.5 + 1e-12);
            assert_relative_eq!(sample.rhs, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn flowed_convexity_small_time_recovers_convexity_check() {
        let s = Euclidean::new(1);
        let f = Quadratic::scalar(1.0, 0.0);
        let flow = |t: f64, p: &Vec<f64>| vec![p[0] * (-t).exp()];
        let theta = 0.25;
        let (x0, x1) = (vec![-1.0], vec![2.0]);
        let report = flowed_convexity_check(&flow, &f, &s, &x0, &x1, theta, 0.0, &[1e-6], 1.0);
        let plain = lambda_convexity_check(&f, &s, &x0, &x1, &[theta], 1.0);
        assert!(report.pass && plain.pass);
        let flowed = report.samples[0].lhs;
        let static_value = plain.samples[0].lhs;
        assert_relative_eq!(flowed, static_value, epsilon = 1e-5);
    }

    #[test]
    fn flowed_convexity_trivial_at_minimizer() {
        let s = Euclidean::new(1);
        let f = Quadratic::scalar(1.0, 0.0);
        let flow = |t: f64, p: &Vec<f64>| vec![p[0] * (-t).exp()];
        let report = flowed_convexity_check(
            &flow, &f, &s, &vec![0.0], &vec![0.0], 0.5, 0.0, &[0.1, 1.0], 1.0,
        );
        assert!(report.pass);
        for sample in &report.samples {
            assert!(sample.lhs.abs() < 1e-14 && sample.rhs.abs() < 1e-14);
        }
    }

    #[test]
    fn accepted_intermediate_points_satisfy_derived_consequences() {
        // whenever the acceptance inequality holds, the two derived bounds
        // hold: near-proportional split and near-geodesic total length
        let s = Euclidean::new(2);
        let x0 = vec![0.0, 0.0];
        let x1 = vec![2.0, 1.0];
        let d = s.dist(&x0, &x1);
        for theta in [0.25, 0.5, 0.75] {
            for eps in [0.05, 0.2, 0.6] {
                let x = perturbed_intermediate(&s, &x0, &x1, theta, eps);
                assert!(check_intermediate(&s, &x0, &x1, &x, theta, eps));
                let d0 = s.dist(&x0, &x);
                let d1 = s.dist(&x, &x1);
                assert!((d0 / theta - d1 / (1.0 - theta)).abs() <= d * eps + 1e-9);
                assert!(
                    d0 + d1 <= d * (1.0 + eps * eps * theta * (1.0 - theta)).sqrt() + 1e-9
                );
            }
        }
    }
}
