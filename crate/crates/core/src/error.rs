use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// An index or count is out of its admissible range.
    #[error("range error: {0}")]
    Range(String),

    /// An analytic law places more mass above `n_max` than allowed.
    #[error("truncation mass {mass:e} above n_max = {n_max} exceeds cap {cap:e}")]
    Truncation { mass: f64, cap: f64, n_max: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A matrix or vector fails a state invariant (Hermitian, PSD, trace one).
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// The requested dimension exceeds the configured cap for dense simulation.
    #[error("dimension {requested} exceeds cap {cap}")]
    Resource { requested: usize, cap: usize },

    /// Samples do not sit on the grid the operation requires.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
