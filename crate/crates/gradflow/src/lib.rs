//! Gradient flows in metric spaces: proximal stepping schemes, slope and
//! Moreau-Yosida machinery, and auditors for the inequalities an evolution
//! variational flow satisfies.
//!
//! Start from the runnable examples (`cargo run --example <name>`), which
//! walk one capability each:
//!
//! * `spaces_tour` — the two concrete spaces and their geodesics
//! * `moreau_yosida` — regularized values, slopes, the duality bound
//! * `geometry_checks` — intermediate points, dyadic chains, convexity
//! * `resolvent_step` — one relaxed proximal step and its acceptance
//! * `minimizing_movement` — a full scheme run with stability audits
//! * `evi_audit` — contraction, integral forms, the energy identity
//! * `convergence_rates` — order fits and both uniform error bounds
//! * `heat_flow` — entropy flow on a quantile grid against the Gaussian
//! * `ornstein_uhlenbeck` — contraction of two measure flows
//!
//! Library layout mirrors the pipeline: [`base`] holds the space and
//! functional interfaces plus trajectory plumbing; [`spaces`] and
//! [`functionals`] the concrete catalog; [`geometry`] the geodesic
//! auditors; [`resolvent`] one proximal step; [`mm`] the scheme driver and
//! its stability reports; [`evi`] the flow-inequality auditors; [`harness`]
//! reference flows and error-bound studies; [`config`] and [`runner`] the
//! batch front end behind the `gradflow` binary.

pub mod base;
pub mod config;
pub mod evi;
pub mod functionals;
pub mod geometry;
pub mod harness;
pub mod mm;
pub mod report;
pub mod resolvent;
pub mod runner;
pub mod spaces;

pub use base::{
    curve_length, exp_primitive, metric_derivative, EnergySystem, Functional, LambdaParam,
    MetricSpace, Trajectory, TrajectoryKind,
};
pub use report::{AuditReport, AuditSample};
