//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid trace weights: {0}")]
    InvalidWeights(String),

    #[error("invalid block partition: {0}")]
    InvalidBlocks(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operator is not self-adjoint (deviation {deviation:.3e})")]
    NotSelfAdjoint { deviation: f64 },

    #[error("operator is not positive semidefinite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("operator is not block-upper-triangular")]
    NotBlockUpper,

    #[error("spectrum too close to zero (min {min:.3e}, max {max:.3e})")]
    SpectrumNearZero { min: f64, max: f64 },

    #[error("singular or near-singular operator (smallest singular value {smallest_singular_value:.3e})")]
    Singular { smallest_singular_value: f64 },

    #[error("{what} did not converge within the iteration cap")]
    NoConvergence { what: &'static str },

    #[error("no sign change found within the root bracket (malformed polynomial)")]
    NoBracket,

    #[error("normal-equation Gram matrix is numerically singular (condition estimate {condition:.3e})")]
    GramIllConditioned { condition: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
