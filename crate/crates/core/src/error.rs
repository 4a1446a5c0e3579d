use thiserror::Error;

/// Errors produced by model construction, solvers, and simulators.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Physical parameters violate a construction invariant.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Malformed or inconsistent configuration input.
    #[error("config error (line {line}): {msg}")]
    Config { line: usize, msg: String },

    /// The drift matrix is not Hurwitz within the stability margin.
    #[error("unstable system: {0}")]
    UnstableSystem(String),

    /// A solver produced a result that failed its own residual or
    /// cross-check diagnostics.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// The covariance integral's tail estimate exceeded tolerance.
    #[error("integral not converged: {0}")]
    NonConvergence(String),

    /// A covariance matrix violates the bona-fide uncertainty bound.
    #[error("unphysical state: {0}")]
    UnphysicalState(String),

    /// A readout approximation's validity inequality does not hold.
    #[error("regime violation: {0}")]
    RegimeViolation(String),

    /// A threshold bracket does not actually bracket the boundary.
    #[error("invalid bracket: {0}")]
    BracketInvalid(String),

    /// Trajectory integration step too coarse for the fastest mode.
    #[error("step too large: {0}")]
    StepTooLarge(String),
}

pub type Result<T> = std::result::Result<T, Error>;
