//! Transport distances between measure-function pairs, and the relaxed
//! two-fluid least-action functional.
//!
//! The distance lifts each support point `x` to `(x, g(x))` and transports
//! the lifted measures. The relaxed functional lets a density-one fluid and a
//! weightless one share every cell; [`minimality_probe`] samples admissible
//! perturbations of a state to check that none lowers its action.

mod metric;
mod probe;
mod relaxed;

pub use metric::{
    base_distance, geodesic_tlp_uniformity, lifted_cost, map_stability_tlp, tlp_distance, tlp_solve, TLpPair,
    TlpOrder, TlpSolution, UniformityReport,
};
pub use probe::{minimality_probe, ProbeOptions, ProbeReport};
pub use relaxed::{
    constraint_residual, khat, legendre_check, relaxed_action, ActionReport, ConstraintReport, LegendreReport,
    RelaxedState, SUM_TOL,
};
