//! Energy functionals: values, slopes, Moreau-Yosida values, and
//! closed-form proximal maps where the catalog has them.
//!
//! Slope conventions
//! -----------------
//! `metric_slope` returns the local descent rate
//! `limsup_{y -> x} (phi(x) - phi(y))^+ / dist(x, y)`, through an exact
//! formula whenever the functional provides one and through a
//! shrinking-ball sampler otherwise. `global_slope` evaluates the
//! globally-certified variant
//! `sup_y (phi(x) - phi(y) + lambda/2 dist^2)^+ / dist` on a finite probe
//! set, hence always a lower bound of the true supremum. For the convex
//! catalog the two notions agree.

use crate::base::{Functional, MetricSpace};
use crate::report::{AuditReport, AuditSample};
use crate::resolvent::{solve_resolvent, SolverConfig};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FunctionalError {
    #[error("non-finite evaluation at {0}")]
    NonFinite(String),
}

/// `phi(x) = x^T A x / 2 - b . x` with `A` symmetric positive semidefinite.
/// The convexity hint is the smallest eigenvalue of `A`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    a: DMatrix<f64>,
    b: DVector<f64>,
    lambda_min: f64,
}

impl Quadratic {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "A must be square");
        assert_eq!(a.nrows(), b.len(), "A and b dimension mismatch");
        let sym_err = (&a - a.transpose()).abs().max();
        assert!(sym_err < 1e-12, "A must be symmetric (asymmetry {sym_err:e})");
        let eigen = a.clone().symmetric_eigen();
        let lambda_min = eigen.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(lambda_min >= -1e-10, "A must be positive semidefinite");
        Quadratic { a, b, lambda_min: lambda_min.max(0.0) }
    }

    /// One-dimensional `phi(x) = a x^2 / 2 - b x`.
    pub fn scalar(a: f64, b: f64) -> Self {
        Quadratic::new(DMatrix::from_element(1, 1, a), DVector::from_element(1, b))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.b
    }
}

impl<S: MetricSpace<Point = Vec<f64>>> Functional<S> for Quadratic {
    fn value_coords(&self, _space: &S, coords: &[f64]) -> f64 {
        let x = DVector::from_column_slice(coords);
        0.5 * x.dot(&(&self.a * &x)) - self.b.dot(&x)
    }

    fn lambda_hint(&self) -> f64 {
        self.lambda_min
    }

    fn analytic_slope(&self, _space: &S, x: &Vec<f64>) -> Option<f64> {
        let x = DVector::from_column_slice(x);
        Some((&self.a * &x - &self.b).norm())
    }

    fn closed_form_prox(&self, space: &S, tau: f64, x: &Vec<f64>) -> Option<Vec<f64>> {
        // (I + tau A) y = x + tau b
        let n = self.a.nrows();
        let system = DMatrix::identity(n, n) + tau * &self.a;
        let rhs = DVector::from_column_slice(x) + tau * &self.b;
        let y = system.lu().solve(&rhs).expect("I + tau A is positive definite");
        Some(space.point_from_coords(y.iter().cloned().collect()))
    }

    fn grad_coords(&self, _space: &S, coords: &[f64], out: &mut [f64]) -> bool {
        let x = DVector::from_column_slice(coords);
        let g = &self.a * &x - &self.b;
        out.copy_from_slice(g.as_slice());
        true
    }

    fn hess_tridiag_coords(&self, _space: &S, _coords: &[f64], diag: &mut [f64], off: &mut [f64]) -> bool {
        let n = self.a.nrows();
        for i in 0..n {
            for j in 0..n {
                if (i as i64 - j as i64).abs() > 1 && self.a[(i, j)] != 0.0 {
                    return false;
                }
            }
        }
        for (i, d) in diag.iter_mut().enumerate().take(n) {
            *d = self.a[(i, i)];
        }
        for (i, o) in off.iter_mut().enumerate().take(n - 1) {
            *o = self.a[(i, i + 1)];
        }
        true
    }
}

/// Weighted l1 norm `phi(x) = w * sum_i |x_i|`; convex and nonsmooth, with
/// the soft-threshold proximal map.
#[derive(Debug, Clone, Copy)]
pub struct AbsNorm {
    pub weight: f64,
}

impl AbsNorm {
    pub fn new(weight: f64) -> Self {
        assert!(weight > 0.0, "weight must be positive");
        AbsNorm { weight }
    }
}

impl<S: MetricSpace<Point = Vec<f64>>> Functional<S> for AbsNorm {
    fn value_coords(&self, _space: &S, coords: &[f64]) -> f64 {
        self.weight * coords.iter().map(|c| c.abs()).sum::<f64>()
    }

    fn lambda_hint(&self) -> f64 {
        0.0
    }

    fn analytic_slope(&self, _space: &S, x: &Vec<f64>) -> Option<f64> {
        // minimal-norm subgradient: zero coordinates contribute nothing
        let nnz = x.iter().filter(|c| **c != 0.0).count();
        Some(self.weight * (nnz as f64).sqrt())
    }

    fn closed_form_prox(&self, _space: &S, tau: f64, x: &Vec<f64>) -> Option<Vec<f64>> {
        let shift = self.weight * tau;
        Some(
            x.iter()
                .map(|&c| c.signum() * (c.abs() - shift).max(0.0))
                .collect(),
        )
    }
}

/// `phi(x) = -sqrt(x)` on `[0, inf)`, `+inf` elsewhere (one-dimensional).
/// Convex on its domain with unbounded slope at the origin, which is the
/// interesting regime for the coarse-data error bound.
#[derive(Debug, Clone, Copy, Default)]
pub struct NegSqrt;

impl<S: MetricSpace<Point = Vec<f64>>> Functional<S> for NegSqrt {
    fn value_coords(&self, _space: &S, coords: &[f64]) -> f64 {
        assert_eq!(coords.len(), 1, "NegSqrt is one-dimensional");
        if coords[0] < 0.0 {
            f64::INFINITY
        } else {
            -coords[0].sqrt()
        }
    }

    fn lambda_hint(&self) -> f64 {
        0.0
    }

    fn analytic_slope(&self, _space: &S, x: &Vec<f64>) -> Option<f64> {
        let v = x[0];
        Some(if v > 0.0 { 0.5 / v.sqrt() } else { f64::INFINITY })
    }

    fn closed_form_prox(&self, _space: &S, tau: f64, x: &Vec<f64>) -> Option<Vec<f64>> {
        // optimality in z = sqrt(y): z^3 - x z - tau/2 = 0, positive root
        let c = x[0];
        let mut hi = (c.max(0.0).sqrt() + 1.0).max((0.5 * tau).cbrt() + 1.0);
        let f = |z: f64| z * z * z - c * z - 0.5 * tau;
        while f(hi) <= 0.0 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let z = 0.5 * (lo + hi);
        Some(vec![z * z])
    }
}

/// Discrete logarithmic entropy in quantile coordinates:
/// `phi(q) = -(1/M) sum_i log((q_{i+1} - q_i) M)` over the `M - 1` interior
/// increments, `+inf` when any increment is nonpositive. Forward increments
/// keep the discrete functional convex and finite exactly on strictly
/// monotone vectors.
#[derive(Debug, Clone, Copy, Default)]
pub struct QuantileEntropy;

impl<S: MetricSpace<Point = crate::spaces::QuantilePoint>> Functional<S> for QuantileEntropy {
    fn value_coords(&self, _space: &S, coords: &[f64]) -> f64 {
        let m = coords.len() as f64;
        let mut sum = 0.0;
        for w in coords.windows(2) {
            let d = w[1] - w[0];
            if d <= 0.0 {
                return f64::INFINITY;
            }
            sum += (d * m).ln();
        }
        -sum / m
    }

    fn lambda_hint(&self) -> f64 {
        0.0
    }

    fn analytic_slope(&self, space: &S, x: &crate::spaces::QuantilePoint) -> Option<f64> {
        let coords = space.coords(x);
        let mut g = vec![0.0; coords.len()];
        if !self.grad_coords(space, coords, &mut g) {
            return None;
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Some(f64::INFINITY);
        }
        // metric norm of the coordinate gradient: |g| / sqrt(weight)
        Some(g.iter().map(|v| v * v).sum::<f64>().sqrt() / space.metric_weight().sqrt())
    }

    fn grad_coords(&self, _space: &S, coords: &[f64], out: &mut [f64]) -> bool {
        let n = coords.len();
        let m = n as f64;
        out.fill(0.0);
        for i in 0..n - 1 {
            let d = coords[i + 1] - coords[i];
            if d <= 0.0 {
                out.fill(f64::INFINITY);
                return true;
            }
            let r = 1.0 / (d * m);
            out[i] += r;
            out[i + 1] -= r;
        }
        true
    }

    fn hess_tridiag_coords(&self, _space: &S, coords: &[f64], diag: &mut [f64], off: &mut [f64]) -> bool {
        let n = coords.len();
        let m = n as f64;
        diag.fill(0.0);
        off.fill(0.0);
        for i in 0..n - 1 {
            let d = coords[i + 1] - coords[i];
            let r = 1.0 / (d * d * m);
            diag[i] += r;
            diag[i + 1] += r;
            off[i] -= r;
        }
        true
    }
}

/// Potential energy in quantile coordinates for `V(x) = kappa x^2 / 2`:
/// `phi(q) = (1/M) sum_i V(q_i)`, the integral of `V` against the measure.
#[derive(Debug, Clone, Copy)]
pub struct QuantilePotential {
    pub kappa: f64,
}

impl QuantilePotential {
    pub fn new(kappa: f64) -> Self {
        assert!(kappa >= 0.0, "potential curvature must be nonnegative");
        QuantilePotential { kappa }
    }
}

impl<S: MetricSpace<Point = crate::spaces::QuantilePoint>> Functional<S> for QuantilePotential {
    fn value_coords(&self, _space: &S, coords: &[f64]) -> f64 {
        let m = coords.len() as f64;
        coords.iter().map(|&v| 0.5 * self.kappa * v * v).sum::<f64>() / m
    }

    fn lambda_hint(&self) -> f64 {
        self.kappa
    }

    fn analytic_slope(&self, _space: &S, x: &crate::spaces::QuantilePoint) -> Option<f64> {
        let m = x.grid_size() as f64;
        Some(
            (x.values()
                .iter()
                .map(|&v| (self.kappa * v) * (self.kappa * v))
                .sum::<f64>()
                / m)
                .sqrt(),
        )
    }

    fn grad_coords(&self, _space: &S, coords: &[f64], out: &mut [f64]) -> bool {
        let m = coords.len() as f64;
        for (o, &c) in out.iter_mut().zip(coords) {
            *o = self.kappa * c / m;
        }
        true
    }

    fn hess_tridiag_coords(&self, _space: &S, coords: &[f64], diag: &mut [f64], off: &mut [f64]) -> bool {
        let m = coords.len() as f64;
        diag.fill(self.kappa / m);
        off.fill(0.0);
        let _ = coords;
        true
    }
}

/// Pointwise sum of two functionals on the same space. Gradients and
/// Hessians compose; closed-form proximal maps do not.
#[derive(Debug, Clone)]
pub struct Sum<F1, F2>(pub F1, pub F2);

impl<S, F1, F2> Functional<S> for Sum<F1, F2>
where
    S: MetricSpace,
    F1: Functional<S>,
    F2: Functional<S>,
{
    fn value_coords(&self, space: &S, coords: &[f64]) -> f64 {
        self.0.value_coords(space, coords) + self.1.value_coords(space, coords)
    }

    fn lambda_hint(&self) -> f64 {
        self.0.lambda_hint() + self.1.lambda_hint()
    }

    fn analytic_slope(&self, space: &S, x: &S::Point) -> Option<f64> {
        let coords = space.coords(x);
        let mut g = vec![0.0; coords.len()];
        if !self.grad_coords(space, coords, &mut g) {
            return None;
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Some(f64::INFINITY);
        }
        Some(g.iter().map(|v| v * v).sum::<f64>().sqrt() / space.metric_weight().sqrt())
    }

    fn grad_coords(&self, space: &S, coords: &[f64], out: &mut [f64]) -> bool {
        let mut g2 = vec![0.0; coords.len()];
        if !self.0.grad_coords(space, coords, out) || !self.1.grad_coords(space, coords, &mut g2) {
            return false;
        }
        for (o, g) in out.iter_mut().zip(&g2) {
            *o += g;
        }
        true
    }

    fn hess_tridiag_coords(&self, space: &S, coords: &[f64], diag: &mut [f64], off: &mut [f64]) -> bool {
        let n = coords.len();
        let mut d2 = vec![0.0; n];
        let mut o2 = vec![0.0; n.saturating_sub(1)];
        if !self.0.hess_tridiag_coords(space, coords, diag, off)
            || !self.1.hess_tridiag_coords(space, coords, &mut d2, &mut o2)
        {
            return false;
        }
        for (a, b) in diag.iter_mut().zip(&d2) {
            *a += b;
        }
        for (a, b) in off.iter_mut().zip(&o2) {
            *a += b;
        }
        true
    }
}

/// Local descent rate of `f` at `x`. Uses the catalog's exact formula when
/// available; otherwise samples shrinking spheres of radius
/// `r, r/2, r/4` (scaled by `1 + |x|`) and reports the largest difference
/// quotient, a certified lower bound. Diverging quotients report `+inf`.
pub fn metric_slope<S: MetricSpace, F: Functional<S>>(f: &F, space: &S, x: &S::Point) -> f64 {
    if f.value(space, x) == f64::INFINITY {
        return f64::INFINITY;
    }
    if let Some(s) = f.analytic_slope(space, x) {
        return s;
    }
    let phi_x = f.value(space, x);
    let scale = 1.0 + space.coords(x).iter().map(|c| c * c).sum::<f64>().sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(0x510e);
    let mut quotients = Vec::new();
    for level in 0..3 {
        let r = 1e-2 * scale / (1 << level) as f64;
        let mut best: f64 = 0.0;
        for y in space.sphere_probes(x, r, 32, &mut rng) {
            let d = space.dist(x, &y);
            if d == 0.0 {
                continue;
            }
            best = best.max((phi_x - f.value(space, &y)).max(0.0) / d);
        }
        quotients.push(best);
    }
    // quotients doubling as the radius halves indicate a 1/r blow-up
    if quotients[2] >= 1.8 * quotients[1] && quotients[1] >= 1.8 * quotients[0] && quotients[0] > 0.0 {
        return f64::INFINITY;
    }
    let extrapolated = 2.0 * quotients[2] - quotients[1];
    quotients.into_iter().fold(extrapolated, f64::max)
}

/// Globally-certified slope at modulus `lambda`, evaluated on a probe set:
/// the maximum of `(phi(x) - phi(y) + lambda/2 dist^2)^+ / dist`. Always a
/// lower bound of the true supremum.
pub fn global_slope<S: MetricSpace, F: Functional<S>>(
    f: &F,
    space: &S,
    lambda: f64,
    x: &S::Point,
    probes: &[S::Point],
) -> f64 {
    assert!(!probes.is_empty(), "global_slope needs probes");
    let phi_x = f.value(space, x);
    if phi_x == f64::INFINITY {
        return f64::INFINITY;
    }
    let mut best: f64 = 0.0;
    for y in probes {
        let d = space.dist(x, y);
        if d == 0.0 {
            continue;
        }
        let num = (phi_x - f.value(space, y) + 0.5 * lambda * d * d).max(0.0);
        best = best.max(num / d);
    }
    best
}

/// Moreau-Yosida value `phi_tau(x) = inf_y phi(y) + dist(x,y)^2 / (2 tau)`,
/// evaluated through one proximal solve. Guarded against `tau` beyond the
/// quadratic-lower-bound threshold when the convexity hint is negative.
pub fn moreau_yosida_value<S: MetricSpace, F: Functional<S>>(
    f: &F,
    space: &S,
    tau: f64,
    x: &S::Point,
    cfg: &SolverConfig,
) -> f64 {
    assert!(tau > 0.0, "tau must be positive");
    let lambda = f.lambda_hint();
    if lambda < 0.0 {
        assert!(
            tau < 0.9 / (-lambda),
            "tau {tau} too large for convexity hint {lambda}"
        );
    }
    solve_resolvent(f, space, tau, 0.0, x, cfg).objective
}

/// Checks the internal-energy admissibility condition: `s -> e^s F(e^{-s})`
/// must be nonincreasing and convex on the sampled grid, within `1e-10`.
pub fn mccann_check(
    f: &dyn Fn(f64) -> f64,
    s_grid: &[f64],
) -> Result<bool, FunctionalError> {
    assert!(s_grid.len() >= 3, "need at least three grid points");
    assert!(
        s_grid.windows(2).all(|w| w[0] < w[1]),
        "s_grid must be increasing"
    );
    const SLACK: f64 = 1e-10;
    let g: Vec<f64> = s_grid
        .iter()
        .map(|&s| {
            let v = s.exp() * f((-s).exp());
            if v.is_finite() {
                Ok(v)
            } else {
                Err(FunctionalError::NonFinite(format!("s = {s}")))
            }
        })
        .collect::<Result<_, _>>()?;
    for w in g.windows(2) {
        if w[1] > w[0] + SLACK {
            return Ok(false);
        }
    }
    for i in 1..g.len() - 1 {
        let (s0, s1, s2) = (s_grid[i - 1], s_grid[i], s_grid[i + 1]);
        let chord = ((s2 - s1) * g[i - 1] + (s1 - s0) * g[i + 1]) / (s2 - s0);
        if g[i] > chord + SLACK {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Audits the duality between Moreau-Yosida decay and the squared slope:
/// `(1 + lambda tau) (phi(x) - phi_tau(x)) / tau <= slope^2 / 2` on the
/// whole grid, and equality of the quotient at the smallest `tau` within
/// `limit_tol`.
pub fn duality_slope_check<S: MetricSpace, F: Functional<S>>(
    f: &F,
    space: &S,
    lambda: f64,
    x: &S::Point,
    tau_grid: &[f64],
    limit_tol: f64,
    cfg: &SolverConfig,
) -> AuditReport {
    assert!(!tau_grid.is_empty());
    assert!(tau_grid.iter().all(|&t| t > 0.0 && lambda * t > -1.0));
    let phi_x = f.value(space, x);
    let half_slope_sq = 0.5 * metric_slope(f, space, x).powi(2);
    let mut upper = Vec::new();
    let mut smallest = (f64::INFINITY, 0.0);
    for &tau in tau_grid {
        let quotient = (1.0 + lambda * tau) * (phi_x - moreau_yosida_value(f, space, tau, x, cfg)) / tau;
        upper.push(AuditSample::new(format!("tau={tau}"), quotient, half_slope_sq));
        if tau < smallest.0 {
            smallest = (tau, quotient);
        }
    }
    let bound = AuditReport::new("duality-upper", 1e-8 * (1.0 + half_slope_sq.abs()), upper);
    let limit = AuditReport::new(
        "duality-limit",
        limit_tol,
        vec![AuditSample::new(
            format!("tau={}", smallest.0),
            (smallest.1 - half_slope_sq).abs(),
            0.0,
        )],
    );
    AuditReport::combine("duality-slope", vec![bound, limit])
}
