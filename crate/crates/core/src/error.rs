//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by shapeflow operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A density or measure carries no mass.
    #[error("shape has zero mass")]
    ZeroMass,

    /// An operation needs a nonempty support.
    #[error("shape has empty support")]
    EmptySupport,

    /// The two measures do not carry the same mass.
    #[error("mass mismatch: {left} vs {right}")]
    MassMismatch { left: f64, right: f64 },

    /// The dense cost matrix would be too large.
    #[error("size guard exceeded: {n} x {m} cost entries (limit {limit})")]
    SizeGuardExceeded { n: usize, m: usize, limit: usize },

    /// An iterative solver ran out of budget.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// The local least-squares fit of the Jacobian is rank deficient.
    #[error("degenerate neighborhood around sample {index}")]
    DegenerateNeighborhood { index: usize },

    /// Grid resolution cannot represent the request.
    #[error("resolution too coarse: {0}")]
    ResolutionTooCoarse(String),

    /// Grid resolution or extent does not match the data.
    #[error("resolution mismatch: {0}")]
    ResolutionMismatch(String),

    /// Initial droplet velocity is not tangent to the constraint surface.
    #[error("initial velocity not tangent to constraint surface (residual {0:e})")]
    TangencyViolated(f64),

    /// A droplet semi-axis grew past the blow-up guard.
    #[error("blow-up guard tripped at t = {t}: max axis {max_axis}")]
    BlowupGuard { t: f64, max_axis: f64 },

    /// Greedy ball packing made no progress.
    #[error("ball packing stalled after {0} inadmissible candidates")]
    Stall(usize),

    /// Consecutive paths in a concatenation do not join up.
    #[error("chain broken between segments {k} and {next}: gap {gap:e}", next = k + 1)]
    ChainBroken { k: usize, gap: f64 },

    /// Flow and test-function bank disagree on the quadrature.
    #[error("quadrature mismatch: {0}")]
    QuadratureMismatch(String),

    /// Malformed or out-of-range input.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of an iterative numerical method, as opposed to bad input.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::Stall(_) | Error::BlowupGuard { .. }
        )
    }
}
