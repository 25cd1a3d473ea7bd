//! The proximal stepping driver with relaxed acceptance, its
//! piecewise-constant interpolant, and the discrete/continuous stability
//! auditors.

use crate::base::{Functional, MetricSpace, Trajectory};
use crate::functionals::{metric_slope, moreau_yosida_value};
use crate::report::{AuditReport, AuditSample};
use crate::resolvent::{solve_resolvent, ResolventResult, SolverConfig};
use std::io::{BufRead, Write};
use thiserror::Error;

/// Parameters of one scheme run.
#[derive(Debug, Clone)]
pub struct SchemeParams {
    pub tau: f64,
    pub eta: f64,
    /// Target per-step relaxation; the run measures the actual value.
    pub eps_target: f64,
    pub n_steps: usize,
    pub solver: SolverConfig,
}

impl SchemeParams {
    pub fn new(tau: f64, n_steps: usize) -> Self {
        SchemeParams { tau, eta: 0.0, eps_target: 0.0, n_steps, solver: SolverConfig::default() }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_solver(mut self, solver: SolverConfig) -> Self {
        self.solver = solver;
        self
    }
}

/// Output of a scheme run: iterates, per-step solver records, cached
/// energies and slopes, and the measured per-step relaxation.
#[derive(Debug, Clone)]
pub struct DiscreteTrajectory<P> {
    pub tau: f64,
    pub eta: f64,
    /// Largest per-step relaxation observed, measured against the
    /// step-estimate hypotheses at the clamped modulus.
    pub eps_measured: f64,
    /// Iterates, starting value first.
    pub points: Vec<P>,
    pub per_step: Vec<ResolventResult<P>>,
    /// Energy along the iterates.
    pub phis: Vec<f64>,
    /// Metric slope along the iterates.
    pub slopes: Vec<f64>,
    /// Largest inner-solver residual when the per-step records are not
    /// available (trajectories loaded from disk).
    pub inner_max: f64,
}

impl<P: Clone + PartialEq + std::fmt::Debug> DiscreteTrajectory<P> {
    pub fn n_steps(&self) -> usize {
        self.points.len() - 1
    }

    /// Inner-solver residual that produced iterate `n` (zero for the
    /// starting value and for closed-form steps).
    pub fn inner_residual(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else if let Some(step) = self.per_step.get(n - 1) {
            if step.inner_residual.is_finite() {
                step.inner_residual
            } else {
                0.0
            }
        } else {
            self.inner_max
        }
    }

    pub fn horizon(&self) -> f64 {
        self.n_steps() as f64 * self.tau
    }

    /// View as a piecewise-constant trajectory on the grid times.
    pub fn to_trajectory(&self) -> Trajectory<P> {
        let times = (0..self.points.len()).map(|n| n as f64 * self.tau).collect();
        Trajectory::piecewise_constant(times, self.points.clone())
    }
}

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("initial point lies outside the energy domain")]
    InitialOutsideDomain,
    #[error("step-size guard violated: 4 gamma tau = {0} exceeds 1")]
    GuardViolated(f64),
    #[error("step {step} rejected (near-minimality violation {worst_violation:e})")]
    StepRejected { step: usize, worst_violation: f64 },
}

/// Smallest grid multiple of `tau` at or above `t`.
pub fn t_ceil(t: f64, tau: f64) -> f64 {
    ceil_index(t, tau) as f64 * tau
}

/// Grid index of `t_ceil(t, tau)`, with round-off snapping so that exact
/// multiples stay on their node.
pub fn ceil_index(t: f64, tau: f64) -> usize {
    assert!(tau > 0.0, "tau must be positive");
    assert!(t >= 0.0, "t must be nonnegative");
    let r = t / tau;
    let rounded = r.round();
    if (r - rounded).abs() <= 1e-9 * r.abs().max(1.0) {
        rounded as usize
    } else {
        r.ceil() as usize
    }
}

/// Growth rate entering the uniform error estimates.
pub fn gamma_of(eta: f64, lambda: f64) -> f64 {
    2.0 * eta - 3.0 * lambda
}

/// Runs the relaxed proximal scheme: each iterate is an accepted resolvent
/// step from its predecessor. Any acceptance failure aborts with the step
/// index and worst violation; the a priori error bounds are per-step
/// statements and a single bad step voids them.
pub fn run_minimizing_movement<S: MetricSpace, F: Functional<S>>(
    space: &S,
    f: &F,
    params: &SchemeParams,
    u0: &S::Point,
) -> Result<DiscreteTrajectory<S::Point>, SchemeError> {
    if f.value(space, u0) == f64::INFINITY {
        return Err(SchemeError::InitialOutsideDomain);
    }
    let lambda_c = f.lambda_hint().min(0.0);
    let guard = 4.0 * gamma_of(params.eta, lambda_c) * params.tau;
    if guard > 1.0 {
        return Err(SchemeError::GuardViolated(guard));
    }

    let mut points = vec![u0.clone()];
    let mut per_step = Vec::with_capacity(params.n_steps);
    for step in 1..=params.n_steps {
        let prev = points.last().unwrap();
        let result = solve_resolvent(f, space, params.tau, params.eta, prev, &params.solver);
        if !(result.accepted_90bis && result.accepted_90) {
            return Err(SchemeError::StepRejected {
                step,
                worst_violation: result.worst_violation,
            });
        }
        points.push(result.point.clone());
        per_step.push(result);
    }

    let phis: Vec<f64> = points.iter().map(|p| f.value(space, p)).collect();
    let slopes: Vec<f64> = points.iter().map(|p| metric_slope(f, space, p)).collect();
    let inner_max = per_step
        .iter()
        .map(|s| s.inner_residual)
        .filter(|r| r.is_finite())
        .fold(0.0f64, f64::max);
    let mut traj = DiscreteTrajectory {
        tau: params.tau,
        eta: params.eta,
        eps_measured: 0.0,
        points,
        per_step,
        phis,
        slopes,
        inner_max,
    };
    traj.eps_measured = eps_required(space, &traj, lambda_c);
    Ok(traj)
}

/// Piecewise-constant interpolant: the starting value at `t = 0` and the
/// `n`-th iterate on `((n-1) tau, n tau]`.
pub fn interpolant_eval<P>(traj: &DiscreteTrajectory<P>, t: f64) -> &P
where
    P: Clone + PartialEq + std::fmt::Debug,
{
    let n = ceil_index(t, traj.tau);
    assert!(
        n <= traj.n_steps(),
        "t = {t} beyond the horizon {}",
        traj.horizon()
    );
    &traj.points[n]
}

/// Smallest per-step relaxation under which every step satisfies the two
/// step-estimate hypotheses at modulus `lambda`:
/// `tau (1 - eta tau/2)^2 slope(U^n)^2 <= d_n^2/tau + eps` and
/// `(1 - (eta - lambda) tau / 2) d_n^2/tau <= phi drop + eps`.
pub fn eps_required<S: MetricSpace>(
    space: &S,
    traj: &DiscreteTrajectory<S::Point>,
    lambda: f64,
) -> f64 {
    let (tau, eta) = (traj.tau, traj.eta);
    let mut eps: f64 = 0.0;
    for n in 1..traj.points.len() {
        let d = space.dist(&traj.points[n - 1], &traj.points[n]);
        let slope = traj.slopes[n];
        if slope.is_finite() {
            eps = eps.max(tau * (1.0 - 0.5 * eta * tau).powi(2) * slope * slope - d * d / tau);
        }
        let drop = traj.phis[n - 1] - traj.phis[n];
        eps = eps.max((1.0 - 0.5 * (eta - lambda) * tau) * d * d / tau - drop);
    }
    eps.max(0.0)
}

/// Per-step stability audit: the slope bound from acceptance, the energy
/// drop bound from convexity, and the two one-step decay inequalities at
/// `lambda_prime = eta (1 + tau lambda_+ / 2) - lambda`.
///
/// Iterates produced by an inexact inner solver sit within its gradient
/// residual of the exact resolvent; each inequality carries the matching
/// slack, so the audit certifies exactly what the solver achieved.
pub fn discrete_stability_report<S: MetricSpace>(
    space: &S,
    traj: &DiscreteTrajectory<S::Point>,
    lambda: f64,
) -> AuditReport {
    let (tau, eta) = (traj.tau, traj.eta);
    let lambda_prime = eta * (1.0 + 0.5 * tau * lambda.max(0.0)) - lambda;
    let mut slope_step = Vec::new();
    let mut energy_step = Vec::new();
    let mut dist_decay = Vec::new();
    let mut slope_decay = Vec::new();
    for n in 1..traj.points.len() {
        let d = space.dist(&traj.points[n - 1], &traj.points[n]);
        let s_prev = traj.slopes[n - 1];
        let s_cur = traj.slopes[n];
        let drop = traj.phis[n - 1] - traj.phis[n];
        let r = traj.inner_residual(n);
        let r_prev = traj.inner_residual(n - 1);
        slope_step.push(AuditSample::new(
            format!("step {n}"),
            (1.0 - 0.5 * eta * tau) * s_cur,
            d / tau + r,
        ));
        energy_step.push(AuditSample::new(
            format!("step {n}"),
            (1.0 + 0.5 * (lambda - eta) * tau) * d * d / tau,
            drop + 2.0 * d * r + r * r * tau,
        ));
        dist_decay.push(AuditSample::new(
            format!("step {n}"),
            (1.0 + (lambda - eta) * tau) * d / tau,
            s_prev + r_prev,
        ));
        slope_decay.push(AuditSample::new(
            format!("step {n}"),
            (1.0 - lambda_prime * tau) * s_cur,
            s_prev + r + r_prev,
        ));
    }
    let scale = 1.0
        + traj
            .phis
            .iter()
            .filter(|p| p.is_finite())
            .fold(0.0f64, |a, &b| a.max(b.abs()));
    let tol = 1e-9 * scale;
    AuditReport::combine(
        "discrete-stability",
        vec![
            AuditReport::new("step-slope", tol, slope_step),
            AuditReport::new("step-energy", tol, energy_step),
            AuditReport::new("step-distance-decay", tol, dist_decay),
            AuditReport::new("step-slope-decay", tol, slope_decay),
        ],
    )
}

/// Stability over finite horizons measured against Moreau-Yosida decay of
/// the starting value, with rate `beta = eta - lambda` (needs
/// `lambda <= 0` and `4 beta tau <= 1`): distance from the start,
/// restart consistency (a second scheme is launched from the interpolant
/// value), and the slope bound.
pub fn continuous_stability_report<S: MetricSpace, F: Functional<S>>(
    space: &S,
    f: &F,
    traj: &DiscreteTrajectory<S::Point>,
    lambda: f64,
    t_samples: &[f64],
    s_samples: &[f64],
    cfg: &SolverConfig,
) -> AuditReport {
    assert!(lambda <= 0.0, "the refined stability estimates need lambda <= 0");
    let (tau, eta) = (traj.tau, traj.eta);
    let beta = eta - lambda;
    assert!(4.0 * beta * tau <= 1.0 + 1e-12, "needs 4 beta tau <= 1");
    let u0 = &traj.points[0];
    let phi0 = traj.phis[0];
    let stretch = |t: f64| (1.0 + 4.0 * beta * tau) * t_ceil(t, tau);
    let my_gap = |sigma: f64| phi0 - moreau_yosida_value(f, space, sigma, u0, cfg);

    let tol = 1e-9 * (1.0 + phi0.abs());
    let mut from_start = Vec::new();
    let mut slope_bound = Vec::new();
    for &t in t_samples {
        assert!(t > 0.0 && t <= traj.horizon() + 1e-12);
        let tb = stretch(t);
        let sigma = crate::base::exp_primitive(-beta, tb);
        let gap = my_gap(sigma);
        let u_t = interpolant_eval(traj, t);
        let d = space.dist(u_t, u0);
        from_start.push(AuditSample::new(
            format!("t={t}"),
            0.5 * d * d,
            (2.0 * beta * tb).exp() * sigma * gap,
        ));
        let slope = metric_slope(f, space, u_t);
        if slope.is_finite() {
            slope_bound.push(AuditSample::new(
                format!("t={t}"),
                0.5 * slope * slope,
                (1.0 + 2.0 * eta * tau) * (2.0 * beta * tb).exp()
                    / crate::base::exp_primitive(-beta, t_ceil(t, tau))
                    * gap,
            ));
        }
    }

    let mut restart = Vec::new();
    for &s in s_samples {
        let h = ceil_index(s, tau);
        assert!(
            (s - h as f64 * tau).abs() <= 1e-9 * s.max(1.0),
            "restart offsets must be grid multiples"
        );
        let sb = stretch(s);
        let sigma = crate::base::exp_primitive(-beta, sb);
        let gap = my_gap(sigma);
        // second scheme launched from the interpolant value at s
        let max_n = t_samples.iter().map(|&t| ceil_index(t, tau)).max().unwrap_or(0);
        let params = SchemeParams {
            tau,
            eta,
            eps_target: 0.0,
            n_steps: max_n,
            solver: cfg.clone(),
        };
        let shifted = run_minimizing_movement(space, f, &params, interpolant_eval(traj, s))
            .expect("restart scheme must accept");
        for &t in t_samples {
            let n = ceil_index(t, tau);
            let tb = stretch(t);
            let d = space.dist(&shifted.points[n], &traj.points[n]);
            restart.push(AuditSample::new(
                format!("t={t},s={s}"),
                0.5 * d * d,
                (2.0 * beta * (tb + sb) + eta * tb).exp() * sigma * gap,
            ));
        }
    }

    AuditReport::combine(
        "continuous-stability",
        vec![
            AuditReport::new("distance-from-start", tol, from_start),
            AuditReport::new("restart-consistency", tol, restart),
            AuditReport::new("slope-from-start", tol, slope_bound),
        ],
    )
}

/// Tabular text serialization: one row per iterate with time, coordinates,
/// energy, slope, and step distance.
pub fn write_table<S: MetricSpace, W: Write>(
    space: &S,
    traj: &DiscreteTrajectory<S::Point>,
    mut w: W,
) -> std::io::Result<()> {
    writeln!(
        w,
        "# gradflow trajectory tau={} eta={} eps={} inner={}",
        traj.tau, traj.eta, traj.eps_measured, traj.inner_max
    )?;
    writeln!(w, "# n\tt\tpoint\tphi\tslope\tstep_dist")?;
    for n in 0..traj.points.len() {
        let coords: Vec<String> = space
            .coords(&traj.points[n])
            .iter()
            .map(|c| format!("{c}"))
            .collect();
        let step_dist = if n == 0 {
            0.0
        } else {
            space.dist(&traj.points[n - 1], &traj.points[n])
        };
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            n,
            n as f64 * traj.tau,
            coords.join("|"),
            traj.phis[n],
            traj.slopes[n],
            step_dist
        )?;
    }
    Ok(())
}

/// Reads a trajectory serialized by [`write_table`], recomputing energies
/// and slopes from the functional (the stored columns are diagnostics).
pub fn read_table<S: MetricSpace, F: Functional<S>, R: BufRead>(
    space: &S,
    f: &F,
    r: R,
) -> std::io::Result<DiscreteTrajectory<S::Point>> {
    let bad = |m: &str| std::io::Error::new(std::io::ErrorKind::InvalidData, m.to_string());
    let mut tau = None;
    let mut eta = 0.0;
    let mut inner_max = 0.0;
    let mut points = Vec::new();
    for line in r.lines() {
        let line = line?;
        if let Some(rest) = line.strip_prefix("# gradflow trajectory") {
            for field in rest.split_whitespace() {
                if let Some(v) = field.strip_prefix("tau=") {
                    tau = Some(v.parse().map_err(|_| bad("bad tau"))?);
                } else if let Some(v) = field.strip_prefix("eta=") {
                    eta = v.parse().map_err(|_| bad("bad eta"))?;
                } else if let Some(v) = field.strip_prefix("inner=") {
                    inner_max = v.parse().map_err(|_| bad("bad inner residual"))?;
                }
            }
            continue;
        }
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 3 {
            return Err(bad("expected at least three tab-separated columns"));
        }
        let coords: Vec<f64> = cols[2]
            .split('|')
            .map(|v| v.parse().map_err(|_| bad("bad coordinate")))
            .collect::<Result<_, _>>()?;
        points.push(
            space
                .try_point_from_coords(coords)
                .ok_or_else(|| bad("invalid point for this space"))?,
        );
    }
    let tau = tau.ok_or_else(|| bad("missing trajectory header"))?;
    if points.is_empty() {
        return Err(bad("no rows"));
    }
    let phis: Vec<f64> = points.iter().map(|p| f.value(space, p)).collect();
    let slopes: Vec<f64> = points.iter().map(|p| metric_slope(f, space, p)).collect();
    let mut traj = DiscreteTrajectory {
        tau,
        eta,
        eps_measured: 0.0,
        points,
        per_step: Vec::new(),
        phis,
        slopes,
        inner_max,
    };
    traj.eps_measured = eps_required(space, &traj, f.lambda_hint().min(0.0));
    Ok(traj)
}
