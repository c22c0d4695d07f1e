use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("invalid value: {0}")]
    Validation(String),

    #[error("circuit has {num_qubits} qubits, at most {max} are supported")]
    SizeCap { num_qubits: usize, max: usize },

    #[error("matrix is not unitary (unitarity error {error:.3e}, tolerance {tolerance:.1e})")]
    NotUnitary { error: f64, tolerance: f64 },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("dimension mismatch: header declares dimension {expected}, payload holds {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("training diverged at epoch {epoch} (learning rate {learning_rate})")]
    Diverged { epoch: usize, learning_rate: f64 },

    #[error("target variance is zero but prediction error is {sse:.3e}")]
    DegenerateVariance { sse: f64 },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }
}
