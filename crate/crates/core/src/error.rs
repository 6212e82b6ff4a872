//! Crate-wide error type.

/// Errors raised by the library surface.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A stated precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A required event (zero, critical point) was not found on the trajectory.
    #[error("missing event: {0}")]
    MissingEvent(String),
    /// The operation is only defined for a declared subset of inputs.
    #[error("not supported: {0}")]
    NotSupported(String),
    /// An iteration failed to converge within its budget.
    #[error("no convergence: {0}")]
    NoConvergence(String),
    /// A scan found no admissible bracket for root or minimum search.
    #[error("bracket error: {0}")]
    Bracket(String),
}

pub type Result<T> = std::result::Result<T, Error>;
