use thiserror::Error;

/// Errors produced by the library.
///
/// Fault and input indices in messages are 1-based, matching the labels
/// used in problem and weights files.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NsbError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("reading has unknown entries; use marginal likelihood for partial readings")]
    UnknownReading,

    #[error("invalid problem: {}", .0.join("; "))]
    InvalidProblem(Vec<String>),

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("enumeration guard: {inputs} inputs exceeds the limit of {limit}")]
    EnumerationGuard { inputs: usize, limit: usize },

    #[error("invalid trainer config: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = NsbError> = std::result::Result<T, E>;
