//! Error type shared by all modules.

use thiserror::Error;

/// Failure modes of game construction, solvers, and dynamics.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested value exists for no input (e.g. a target outside the
    /// range of a monotone map).
    #[error("no solution: {0}")]
    NoSolution(String),

    /// The operation is not defined for this configuration (wrong family,
    /// wrong player count).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An iterative routine failed to meet its tolerance.
    #[error("did not converge: {0}")]
    Convergence(String),

    /// A stated precondition does not hold at the given point.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A non-finite value appeared mid-computation.
    #[error("numerical failure: {0}")]
    Numeric(String),
}
