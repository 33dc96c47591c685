use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the compiler pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid Pauli letter {letter:?} at position {position}")]
    InvalidPauli { letter: char, position: usize },

    #[error("coefficient must be finite and real, got {0}")]
    InvalidCoefficient(f64),

    #[error("qubit {qubit} is outside the supplied qubit order")]
    SupportOutsideOrder { qubit: usize },

    #[error("{qubits} qubits exceeds the dense limit of {limit}")]
    DenseLimit { qubits: usize, limit: usize },

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
