use thiserror::Error;

/// Errors raised by the geometry, projection and iteration routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid space configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate basis: {0}")]
    DegenerateBasis(String),

    #[error("solver stopped after {iterations} iterations with residual {residual:e} above tolerance {tol:e}")]
    SolverDivergence { iterations: usize, residual: f64, tol: f64 },

    #[error("iteration did not converge within {iterations} steps (last step gap {step_gap:e})")]
    NonConvergence { iterations: usize, step_gap: f64 },

    #[error("brute-force oracle supports rank <= 3, got {0}")]
    OracleRankTooHigh(usize),

    #[error("need at least 5 usable distance values for a rate fit, found {0}")]
    InsufficientDecay(usize),

    #[error("point lies in the intersection (denominator {0:e})")]
    PointInIntersection(f64),

    #[error("Bregman distance evaluated to {0:e}, below the rounding slack")]
    NumericalInconsistency(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
