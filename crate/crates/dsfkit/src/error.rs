//! Error type shared across the crate.

use thiserror::Error;

/// Errors reported by constructors and evaluators.
#[derive(Debug, Error)]
pub enum DsfError {
    /// Two objects built over different ground sets were combined.
    #[error("ground-set mismatch: {0}")]
    GroundMismatch(String),
    /// A constructor argument violated its documented preconditions.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A model failed structural validation (cycle, negative weight, ...).
    #[error("invalid model: {0}")]
    InvalidModel(String),
    /// A brute-force operation was asked to exceed its configured cap.
    #[error("ground set too large: {0}")]
    CapExceeded(String),
    /// Serialization or file I/O problem (used by the CLI layer).
    #[error("i/o error: {0}")]
    Io(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, DsfError>;
