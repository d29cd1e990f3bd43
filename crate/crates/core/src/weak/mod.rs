//! Weak-form verification of droplet, spray and interpolant flows.
//!
//! Flows are sampled through mass-carrying labels (see [`LagrangianFlow`]),
//! rasterized paths through their grid frames. Pairings use the midpoint rule
//! in space and the trapezoid rule in time on the nodes of a
//! [`TestFunctionBank`]; endpoint terms come from the path's own first and
//! last frames.

mod bank;
mod flows;
mod gap;
mod residual;

pub use bank::{uniform_times, Bump, BumpEval, TestFunctionBank};
pub use flows::{LagrangianFlow, Labels, MapInterpolant, Particle};
pub use gap::{
    mean_velocity_check, sweep_report, weak_star_gap, DropletMeanVelocity, MeanVelocityReport, MonotoneViolation,
    SweepPoint, SweepReport, WeakStarReport, MONOTONE_SLACK,
};
pub use residual::{
    compare_refinement, continuity_residual, momentum_residual, refinement_study, weak_residuals, RefinementReport,
    WeakPath, WeakResidualReport, RATIO_RANGE,
};
