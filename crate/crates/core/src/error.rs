//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by architecture construction, matrix operations, and the
/// experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric: {0}")]
    NotSymmetric(String),

    #[error("entry ({row}, {col}) is nonzero outside the connectivity mask")]
    MaskViolation { row: usize, col: usize },

    #[error("matrix is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },

    #[error("objective became non-finite during optimization")]
    NonFiniteObjective,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
