//! Concrete metric spaces: Euclidean `R^d` and the one-dimensional
//! quadratic-Wasserstein space represented by monotone quantile vectors.
//!
//! A probability measure on the line with finite second moment is stored
//! through the values of its quantile function on the midpoint grid
//! `s_i = (i - 1/2) / M`. With the discrete `L^2(0,1)` distance
//! `dist(q, p)^2 = (1/M) sum_i (q_i - p_i)^2` this representation is an
//! isometry onto a convex cone of `R^M` (coordinates scaled by `M^{-1/2}`),
//! which turns Wasserstein geodesics into segments and proximal steps into
//! convex problems.

use crate::base::MetricSpace;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::io::{BufRead, Write};

/// Flat Euclidean space of a fixed dimension; points are plain coordinate
/// vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Euclidean {
    dim: usize,
}

impl Euclidean {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        Euclidean { dim }
    }
}

impl MetricSpace for Euclidean {
    type Point = Vec<f64>;

    fn dim(&self) -> usize {
        self.dim
    }

    fn dist(&self, x: &Vec<f64>, y: &Vec<f64>) -> f64 {
        assert_eq!(x.len(), self.dim, "dimension mismatch");
        assert_eq!(y.len(), self.dim, "dimension mismatch");
        x.iter()
            .zip(y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    fn intermediate(&self, x0: &Vec<f64>, x1: &Vec<f64>, theta: f64) -> Vec<f64> {
        assert!((0.0..=1.0).contains(&theta), "theta {theta} outside [0,1]");
        assert_eq!(x0.len(), x1.len(), "dimension mismatch");
        x0.iter()
            .zip(x1)
            .map(|(a, b)| (1.0 - theta) * a + theta * b)
            .collect()
    }

    fn coords<'a>(&self, p: &'a Vec<f64>) -> &'a [f64] {
        p
    }

    fn point_from_coords(&self, coords: Vec<f64>) -> Vec<f64> {
        assert_eq!(coords.len(), self.dim, "dimension mismatch");
        assert!(coords.iter().all(|c| c.is_finite()), "non-finite coordinate");
        coords
    }

    fn try_point_from_coords(&self, coords: Vec<f64>) -> Option<Vec<f64>> {
        if coords.len() == self.dim && coords.iter().all(|c| c.is_finite()) {
            Some(coords)
        } else {
            None
        }
    }

    fn metric_weight(&self) -> f64 {
        1.0
    }

    fn sphere_probes(
        &self,
        center: &Vec<f64>,
        radius: f64,
        count: usize,
        rng: &mut ChaCha8Rng,
    ) -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| {
                let mut dir: Vec<f64> = (0..self.dim).map(|_| standard_normal(rng)).collect();
                let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt().max(1e-300);
                for d in dir.iter_mut() {
                    *d *= radius / norm;
                }
                center.iter().zip(&dir).map(|(c, d)| c + d).collect()
            })
            .collect()
    }
}

/// Monotonicity violations at or above this size are construction errors;
/// smaller ones are treated as round-off and projected away.
pub const MONOTONE_TOL: f64 = 1e-12;

/// Quantile-function values of a measure on the midpoint grid
/// `s_i = (i - 1/2) / M`, nondecreasing by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantilePoint {
    q: Vec<f64>,
}

impl QuantilePoint {
    /// Builds a quantile point, projecting violations below
    /// [`MONOTONE_TOL`] and panicking on larger ones.
    pub fn new(q: Vec<f64>) -> Self {
        assert!(q.len() >= 2, "need at least two quantile values");
        assert!(q.iter().all(|v| v.is_finite()), "non-finite quantile value");
        let worst = q
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(
            worst < MONOTONE_TOL,
            "quantile vector decreases by {worst:e}, beyond round-off"
        );
        let mut q = q;
        if worst > 0.0 {
            // isotonic projection of a round-off-sized violation
            for i in 1..q.len() {
                if q[i] < q[i - 1] {
                    q[i] = q[i - 1];
                }
            }
        }
        QuantilePoint { q }
    }

    pub fn grid_size(&self) -> usize {
        self.q.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.q
    }

    /// Mean of the represented measure.
    pub fn mean(&self) -> f64 {
        self.q.iter().sum::<f64>() / self.q.len() as f64
    }

    /// Variance of the represented measure.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.q.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.q.len() as f64
    }

    /// Plain-text serialization: header `M=<int>`, one value per line.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "M={}", self.q.len())?;
        for v in &self.q {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> std::io::Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| bad_data("empty quantile file"))??;
        let m: usize = header
            .strip_prefix("M=")
            .ok_or_else(|| bad_data("missing M= header"))?
            .trim()
            .parse()
            .map_err(|e| bad_data(&format!("bad grid size: {e}")))?;
        let mut q = Vec::with_capacity(m);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            q.push(
                line.trim()
                    .parse::<f64>()
                    .map_err(|e| bad_data(&format!("bad value: {e}")))?,
            );
        }
        if q.len() != m {
            return Err(bad_data(&format!("expected {m} values, got {}", q.len())));
        }
        Ok(QuantilePoint::new(q))
    }
}

fn bad_data(msg: &str) -> std::io::Error {
    std::io::Error::new(std::io::ErrorKind::InvalidData, msg)
}

/// The 1D Wasserstein space over a fixed quantile grid of size `M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantileSpace {
    m: usize,
}

impl QuantileSpace {
    pub fn new(m: usize) -> Self {
        assert!(m >= 2, "grid size must be at least 2");
        QuantileSpace { m }
    }

    pub fn grid_size(&self) -> usize {
        self.m
    }

    /// Midpoint grid nodes `s_i = (i - 1/2) / M`.
    pub fn nodes(&self) -> Vec<f64> {
        (1..=self.m).map(|i| (i as f64 - 0.5) / self.m as f64).collect()
    }
}

impl MetricSpace for QuantileSpace {
    type Point = QuantilePoint;

    fn dim(&self) -> usize {
        self.m
    }

    fn dist(&self, x: &QuantilePoint, y: &QuantilePoint) -> f64 {
        assert_eq!(x.grid_size(), self.m, "grid mismatch");
        assert_eq!(y.grid_size(), self.m, "grid mismatch");
        let ss: f64 = x
            .values()
            .iter()
            .zip(y.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (ss / self.m as f64).sqrt()
    }

    fn intermediate(&self, x0: &QuantilePoint, x1: &QuantilePoint, theta: f64) -> QuantilePoint {
        assert!((0.0..=1.0).contains(&theta), "theta {theta} outside [0,1]");
        assert_eq!(x0.grid_size(), x1.grid_size(), "grid mismatch");
        // convex combinations of nondecreasing vectors are nondecreasing
        QuantilePoint::new(
            x0.values()
                .iter()
                .zip(x1.values())
                .map(|(a, b)| (1.0 - theta) * a + theta * b)
                .collect(),
        )
    }

    fn coords<'a>(&self, p: &'a QuantilePoint) -> &'a [f64] {
        p.values()
    }

    fn point_from_coords(&self, coords: Vec<f64>) -> QuantilePoint {
        assert_eq!(coords.len(), self.m, "grid mismatch");
        QuantilePoint::new(coords)
    }

    fn try_point_from_coords(&self, coords: Vec<f64>) -> Option<QuantilePoint> {
        if coords.len() != self.m || coords.iter().any(|c| !c.is_finite()) {
            return None;
        }
        let worst = coords
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(f64::NEG_INFINITY, f64::max);
        if worst < MONOTONE_TOL {
            Some(QuantilePoint::new(coords))
        } else {
            None
        }
    }

    fn metric_weight(&self) -> f64 {
        1.0 / self.m as f64
    }

    fn sphere_probes(
        &self,
        center: &QuantilePoint,
        radius: f64,
        count: usize,
        rng: &mut ChaCha8Rng,
    ) -> Vec<QuantilePoint> {
        // Sorted Gaussian vectors are nondecreasing, so center + direction
        // stays a valid quantile vector.
        (0..count)
            .map(|_| {
                let mut dir: Vec<f64> = (0..self.m).map(|_| standard_normal(rng)).collect();
                dir.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let norm = (dir.iter().map(|d| d * d).sum::<f64>() / self.m as f64)
                    .sqrt()
                    .max(1e-300);
                QuantilePoint::new(
                    center
                        .values()
                        .iter()
                        .zip(&dir)
                        .map(|(c, d)| c + d * radius / norm)
                        .collect(),
                )
            })
            .collect()
    }
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; two uniforms per draw keeps this dependency-free.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Standard normal quantile function by Wichura's AS 241 (PPND16) rational
/// approximation, accurate to roughly 1e-16 relative on (0, 1).
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "normal_quantile needs p in (0,1), got {p}");
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&A_CENTER, r) / poly(&B_CENTER, r);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C_TAIL, r) / poly(&D_TAIL, r)
    } else {
        let r = r - 5.0;
        poly(&E_FAR, r) / poly(&F_FAR, r)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

#[allow(clippy::excessive_precision)] // published coefficients
const A_CENTER: [f64; 8] = [
    3.387_132_872_796_366_608e0,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
#[allow(clippy::excessive_precision)] // published coefficients
const B_CENTER: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561e3,
];
#[allow(clippy::excessive_precision)] // published coefficients
const C_TAIL: [f64; 8] = [
    1.423_437_110_749_683_577_34e0,
    4.630_337_846_156_545_295_9e0,
    5.769_497_221_460_691_405_5e0,
    3.647_848_324_763_204_605_04e0,
    1.270_458_252_452_368_382_58e0,
    2.417_807_251_774_506_117_7e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_4e-4,
];
#[allow(clippy::excessive_precision)] // published coefficients
const D_TAIL: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87e0,
    1.676_384_830_183_803_849_4e0,
    6.897_673_349_851_000_045_5e-1,
    1.481_039_764_274_800_745_9e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
#[allow(clippy::excessive_precision)] // published coefficients
const E_FAR: [f64; 8] = [
    6.657_904_643_501_103_777_2e0,
    5.463_784_911_164_114_369_9e0,
    1.784_826_539_917_291_335_8e0,
    2.965_605_718_285_048_912_3e-1,
    2.653_218_952_657_612_309_3e-2,
    1.242_660_947_388_078_438_6e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
#[allow(clippy::excessive_precision)] // published coefficients
const F_FAR: [f64; 8] = [
    1.0,
    5.998_322_065_558_879_376_9e-1,
    1.369_298_809_227_358_053_1e-1,
    1.487_536_129_085_061_485_25e-2,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

/// Quantile vector of a Gaussian `N(mean, variance)` on the midpoint grid.
pub fn gaussian_quantile(mean: f64, variance: f64, m: usize) -> QuantilePoint {
    assert!(variance > 0.0, "variance must be positive, got {variance}");
    assert!(m >= 2);
    let sd = variance.sqrt();
    QuantilePoint::new(
        (1..=m)
            .map(|i| mean + sd * normal_quantile((i as f64 - 0.5) / m as f64))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::check_intermediate;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;

    #[test]
    fn euclidean_distance_examples() {
        let space = Euclidean::new(2);
        assert_relative_eq!(space.dist(&vec![0.0, 0.0], &vec![3.0, 4.0]), 5.0);
        assert_eq!(space.dist(&vec![1.5, -2.0], &vec![1.5, -2.0]), 0.0);
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn euclidean_dimension_mismatch_panics() {
        let space = Euclidean::new(2);
        space.dist(&vec![0.0, 0.0], &vec![1.0]);
    }

    #[test]
    fn euclidean_midpoint() {
        let space = Euclidean::new(2);
        let mid = space.intermediate(&vec![0.0, 0.0], &vec![3.0, 4.0], 0.5);
        assert_eq!(mid, vec![1.5, 2.0]);
        let start = space.intermediate(&vec![0.0, 0.0], &vec![3.0, 4.0], 0.0);
        assert_eq!(start, vec![0.0, 0.0]);
    }

    #[test]
    #[should_panic(expected = "outside [0,1]")]
    fn intermediate_rejects_theta_outside_unit_interval() {
        let space = Euclidean::new(1);
        space.intermediate(&vec![0.0], &vec![1.0], 1.5);
    }

    #[test]
    fn normal_quantile_reference_table() {
        // Oracle: published values of the standard normal quantile.
        assert_eq!(normal_quantile(0.5), 0.0);
        assert_relative_eq!(normal_quantile(0.975), 1.959963984540054, epsilon = 1e-12);
        assert_relative_eq!(normal_quantile(0.025), -1.959963984540054, epsilon = 1e-12);
        assert_relative_eq!(normal_quantile(0.999), 3.090232306167813, epsilon = 1e-12);
        assert_relative_eq!(normal_quantile(1e-9), -5.997807015007686, epsilon = 1e-11);
        assert_relative_eq!(normal_quantile(0.001953125), -2.8856349124267573, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_quantile_midpoint_symmetry_and_node_value() {
        // odd grid: the middle node sits at s = 1/2, so the value is the mean
        let g = gaussian_quantile(0.0, 1.0, 21);
        assert_relative_eq!(g.values()[10], 0.0, epsilon = 1e-14);
        // M = 20 puts the top node at s = 0.975
        let g = gaussian_quantile(0.0, 1.0, 20);
        assert_relative_eq!(g.values()[19], 1.959963984540054, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_quantile_affine_law() {
        let m = 33;
        let base = gaussian_quantile(0.0, 1.0, m);
        let shifted = gaussian_quantile(1.5, 4.0, m);
        for i in 0..m {
            assert_relative_eq!(shifted.values()[i], 1.5 + 2.0 * base.values()[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn wasserstein_distance_of_shifted_gaussians() {
        // W2 between equal-variance Gaussians is the mean difference.
        let space = QuantileSpace::new(256);
        let a = gaussian_quantile(0.0, 1.0, 256);
        let b = gaussian_quantile(2.0, 1.0, 256);
        assert_relative_eq!(space.dist(&a, &b), 2.0, epsilon = 1e-3);
    }

    #[test]
    fn displacement_midpoint_of_gaussians_is_gaussian() {
        let m = 256;
        let space = QuantileSpace::new(m);
        let a = gaussian_quantile(0.0, 1.0, m);
        let b = gaussian_quantile(2.0, 1.0, m);
        let mid = space.intermediate(&a, &b, 0.5);
        let expect = gaussian_quantile(1.0, 1.0, m);
        assert!(space.dist(&mid, &expect) < 1e-12);
    }

    #[test]
    fn quantile_monotonicity_guard() {
        // tiny violation is projected
        let p = QuantilePoint::new(vec![0.0, -1e-15, 1.0]);
        assert!(p.values().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    #[should_panic(expected = "beyond round-off")]
    fn quantile_large_violation_panics() {
        QuantilePoint::new(vec![0.0, -1e-6, 1.0]);
    }

    #[test]
    fn quantile_isometry_scaling() {
        // dist_W(q, p) equals the Euclidean distance of coordinates scaled
        // by M^(-1/2): the flattening used by the prox solvers.
        let m = 64;
        let space = QuantileSpace::new(m);
        let a = gaussian_quantile(0.0, 1.0, m);
        let b = gaussian_quantile(0.5, 2.0, m);
        let euclid: f64 = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        assert_relative_eq!(space.dist(&a, &b) * (m as f64).sqrt(), euclid, epsilon = 1e-12);
    }

    #[test]
    fn quantile_serialization_round_trip() {
        let p = gaussian_quantile(0.3, 1.7, 17);
        let mut buf = Vec::new();
        p.write_to(&mut buf).unwrap();
        let back = QuantilePoint::read_from(buf.as_slice()).unwrap();
        assert_eq!(p, back);
    }

    proptest! {
        #[test]
        fn euclidean_metric_axioms(
            a in proptest::collection::vec(-10.0f64..10.0, 3),
            b in proptest::collection::vec(-10.0f64..10.0, 3),
            c in proptest::collection::vec(-10.0f64..10.0, 3),
        ) {
            let space = Euclidean::new(3);
            prop_assert_eq!(space.dist(&a, &b), space.dist(&b, &a));
            prop_assert!(space.dist(&a, &c) <= space.dist(&a, &b) + space.dist(&b, &c) + 1e-12);
            prop_assert_eq!(space.dist(&a, &a), 0.0);
        }

        #[test]
        fn intermediate_points_are_geodesic(theta in 0.0f64..=1.0, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = 16;
            let space = QuantileSpace::new(m);
            let o = gaussian_quantile(0.0, 1.0, m);
            let probes = space.sphere_probes(&o, 2.0, 2, &mut rng);
            let (x0, x1) = (&probes[0], &probes[1]);
            let mid = space.intermediate(x0, x1, theta);
            let d = space.dist(x0, x1);
            prop_assert!((space.dist(x0, &mid) - theta * d).abs() < 1e-12 * (1.0 + d));
            if theta > 0.0 && theta < 1.0 {
                prop_assert!(check_intermediate(&space, x0, x1, &mid, theta, 0.0));
            }
            // convex combinations of monotone vectors stay monotone
            prop_assert!(mid.values().windows(2).all(|w| w[0] <= w[1] + 1e-15));
        }

        #[test]
        fn quantile_metric_axioms(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = 24;
            let space = QuantileSpace::new(m);
            let o = gaussian_quantile(0.0, 1.0, m);
            let pts = space.sphere_probes(&o, 1.5, 3, &mut rng);
            let (a, b, c) = (&pts[0], &pts[1], &pts[2]);
            prop_assert_eq!(space.dist(a, b), space.dist(b, a));
            prop_assert!(space.dist(a, c) <= space.dist(a, b) + space.dist(b, c) + 1e-12);
        }
    }
}
