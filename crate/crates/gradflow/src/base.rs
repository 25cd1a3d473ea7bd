//! Scalar helpers, trajectories, and the space/functional interfaces shared
//! by every other module.
//!
//! The two central abstractions are [`MetricSpace`] and [`Functional`]. All
//! concrete spaces in this crate are flat in their coordinates (the squared
//! distance is a constant multiple of the squared Euclidean coordinate
//! distance), which the inner solvers exploit through
//! [`MetricSpace::metric_weight`].

use rand_chacha::ChaCha8Rng;

/// Convexity / contraction modulus, in units of inverse time. The sign is
/// unrestricted; positive values contract, negative values expand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaParam(f64);

impl LambdaParam {
    pub fn new(lambda: f64) -> Self {
        assert!(lambda.is_finite(), "lambda must be finite, got {lambda}");
        LambdaParam(lambda)
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Primitive of `e^{lambda r}` vanishing at zero:
/// `(e^{lambda t} - 1) / lambda` for nonzero `lambda`, and `t` at zero.
///
/// A truncated series keeps the function continuous in `lambda` near zero,
/// where the direct quotient loses all significant digits.
pub fn exp_primitive(lambda: f64, t: f64) -> f64 {
    assert!(t >= 0.0, "exp_primitive needs t >= 0, got {t}");
    let x = lambda * t;
    if x.abs() < 1e-8 {
        // t * (1 + x/2 + x^2/6 + x^3/24), error below 1e-34 relative
        t * (1.0 + x / 2.0 + x * x / 6.0 + x * x * x / 24.0)
    } else {
        x.exp_m1() / lambda
    }
}

/// How the samples of a [`Trajectory`] are meant to be interpolated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryKind {
    /// Samples of a continuous curve; finite differences are meaningful.
    ContinuousSamples,
    /// Output of the piecewise-constant scheme interpolant; jumps at nodes.
    PiecewiseConstant,
}

/// A time-stamped sampled curve. Times are absolute and strictly increasing,
/// so continuous flows and discrete scheme output share one auditing
/// interface.
#[derive(Debug, Clone)]
pub struct Trajectory<P> {
    times: Vec<f64>,
    points: Vec<P>,
    kind: TrajectoryKind,
}

impl<P: Clone> Trajectory<P> {
    pub fn new(times: Vec<f64>, points: Vec<P>, kind: TrajectoryKind) -> Self {
        assert_eq!(times.len(), points.len(), "times/points length mismatch");
        assert!(!times.is_empty(), "a trajectory needs at least one sample");
        assert!(times[0] >= 0.0, "times must be nonnegative");
        assert!(
            times.windows(2).all(|w| w[0] < w[1]),
            "times must be strictly increasing"
        );
        Trajectory { times, points, kind }
    }

    pub fn continuous(times: Vec<f64>, points: Vec<P>) -> Self {
        Self::new(times, points, TrajectoryKind::ContinuousSamples)
    }

    pub fn piecewise_constant(times: Vec<f64>, points: Vec<P>) -> Self {
        Self::new(times, points, TrajectoryKind::PiecewiseConstant)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: at least one sample
    }

    pub fn kind(&self) -> TrajectoryKind {
        self.kind
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[P] {
        &self.points
    }

    pub fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    pub fn point(&self, i: usize) -> &P {
        &self.points[i]
    }
}

/// A metric space with exact constant-speed geodesics, coordinate access for
/// inner solvers, and deterministic probe sampling.
///
/// `dist` must be symmetric, vanish exactly on equal points, and satisfy the
/// triangle inequality; `intermediate` must return the exact geodesic point,
/// i.e. `dist(x0, intermediate(x0, x1, t)) = t * dist(x0, x1)`.
pub trait MetricSpace {
    type Point: Clone + PartialEq + std::fmt::Debug;

    /// Number of scalar coordinates of a point.
    fn dim(&self) -> usize;

    fn dist(&self, x: &Self::Point, y: &Self::Point) -> f64;

    /// Exact constant-speed geodesic point at parameter `theta` in `[0, 1]`.
    fn intermediate(&self, x0: &Self::Point, x1: &Self::Point, theta: f64) -> Self::Point;

    /// Raw coordinate view of a point.
    fn coords<'a>(&self, p: &'a Self::Point) -> &'a [f64];

    /// Rebuild a point from raw coordinates. Panics when the coordinates
    /// violate the space invariants beyond repairable round-off.
    fn point_from_coords(&self, coords: Vec<f64>) -> Self::Point;

    /// Non-panicking variant of [`Self::point_from_coords`]: `None` when
    /// the coordinates are not a valid point of the space.
    fn try_point_from_coords(&self, coords: Vec<f64>) -> Option<Self::Point>;

    /// Weight `w` such that `dist(x, y)^2 = w * sum_i (x_i - y_i)^2`.
    fn metric_weight(&self) -> f64;

    /// Deterministic sample of `count` points at distance `radius` from
    /// `center`, respecting the space invariants.
    fn sphere_probes(
        &self,
        center: &Self::Point,
        radius: f64,
        count: usize,
        rng: &mut ChaCha8Rng,
    ) -> Vec<Self::Point>;
}

/// A proper functional on a metric space, with `+inf` encoded as
/// `f64::INFINITY` outside the domain.
///
/// `value_coords` is the evaluation primitive: it must return `+inf` (never
/// panic) on coordinates outside the domain, so that solvers can probe
/// freely. The optional oracles (`analytic_slope`, `closed_form_prox`,
/// gradient, tridiagonal Hessian) unlock exact slopes and fast proximal
/// steps where the catalog has them.
pub trait Functional<S: MetricSpace> {
    fn value_coords(&self, space: &S, coords: &[f64]) -> f64;

    /// A modulus `lambda` such that the functional is geodesically
    /// `lambda`-convex on its domain.
    fn lambda_hint(&self) -> f64;

    fn value(&self, space: &S, x: &S::Point) -> f64 {
        self.value_coords(space, space.coords(x))
    }

    /// Exact metric slope when known in closed form.
    fn analytic_slope(&self, space: &S, x: &S::Point) -> Option<f64> {
        let _ = (space, x);
        None
    }

    /// Exact minimizer of `y -> dist(x,y)^2/(2 tau) + value(y)` when known.
    fn closed_form_prox(&self, space: &S, tau: f64, x: &S::Point) -> Option<S::Point> {
        let _ = (space, tau, x);
        None
    }

    /// Coordinate gradient of the functional at interior points. Returns
    /// `false` when no gradient oracle is available.
    fn grad_coords(&self, space: &S, coords: &[f64], out: &mut [f64]) -> bool {
        let _ = (space, coords, out);
        false
    }

    /// Symmetric tridiagonal coordinate Hessian (`diag`, `off`), when the
    /// functional has one. Returns `false` otherwise.
    fn hess_tridiag_coords(&self, space: &S, coords: &[f64], diag: &mut [f64], off: &mut [f64]) -> bool {
        let _ = (space, coords, diag, off);
        false
    }
}

/// The triple driving a flow: a space, an energy, and its convexity hint.
#[derive(Debug, Clone)]
pub struct EnergySystem<S, F> {
    pub space: S,
    pub functional: F,
    pub lambda_hint: LambdaParam,
}

impl<S: MetricSpace, F: Functional<S>> EnergySystem<S, F> {
    pub fn new(space: S, functional: F) -> Self {
        let lambda_hint = LambdaParam::new(functional.lambda_hint());
        EnergySystem { space, functional, lambda_hint }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda_hint.get()
    }
}

/// Finite-difference metric speed `|u'|(t_i)` of a sampled continuous curve:
/// central difference at interior indices, one-sided at the ends.
pub fn metric_derivative<S: MetricSpace>(
    space: &S,
    traj: &Trajectory<S::Point>,
    index: usize,
) -> f64 {
    assert_eq!(
        traj.kind(),
        TrajectoryKind::ContinuousSamples,
        "metric derivative needs continuous samples"
    );
    let n = traj.len();
    assert!(n >= 2, "need at least two samples");
    assert!(index < n, "index {index} out of range for {n} samples");
    let (lo, hi) = if index == 0 {
        (0, 1)
    } else if index == n - 1 {
        (n - 2, n - 1)
    } else {
        (index - 1, index + 1)
    };
    space.dist(traj.point(lo), traj.point(hi)) / (traj.time(hi) - traj.time(lo))
}

/// Chordal length of a sampled curve: the sum of consecutive distances.
/// A lower bound of the true length, exact on geodesic segments.
pub fn curve_length<S: MetricSpace>(space: &S, traj: &Trajectory<S::Point>) -> f64 {
    assert_eq!(
        traj.kind(),
        TrajectoryKind::ContinuousSamples,
        "length needs continuous samples"
    );
    traj.points()
        .windows(2)
        .map(|w| space.dist(&w[0], &w[1]))
        .sum()
}

/// Trapezoid rule on a (possibly nonuniform) sample grid.
pub fn trapezoid(ts: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(ts.len(), ys.len());
    ts.windows(2)
        .zip(ys.windows(2))
        .map(|(t, y)| 0.5 * (y[0] + y[1]) * (t[1] - t[0]))
        .sum()
}
