//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition (range, shape, tag).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A state failed a physical-validity check (normalizability, positivity
    /// of the Gaussian quadratic form, non-positive α/β).
    #[error("non-physical state: {0}")]
    NonPhysical(String),

    /// The truncated Fock space can no longer represent the state faithfully
    /// (initial tail mass too large, boundary population grew, trace drifted).
    #[error("truncation failure: {0}")]
    Truncation(String),

    /// An iterative numerical procedure failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// I/O failure while reading or writing a state dump.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
