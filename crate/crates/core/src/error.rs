use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum SvmError {
    #[error("feature index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("sparse indices must be strictly increasing (index {index} after {previous})")]
    UnsortedIndices { previous: usize, index: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("duplicate constraint key (group {group}, local {local})")]
    DuplicateKey { group: u64, local: u64 },

    #[error("infeasible dual variables: {0}")]
    Infeasible(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: I/O error near byte {offset}: {source}")]
    Io {
        path: PathBuf,
        offset: u64,
        #[source]
        source: std::io::Error,
    },

    #[error("model file: {0}")]
    Model(String),

    #[error("dimension mismatch: expected at most {expected} features, found index {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("inference oracle failed: {0}")]
    Oracle(String),
}

pub type Result<T, E = SvmError> = std::result::Result<T, E>;

impl SvmError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        SvmError::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, offset: u64, source: std::io::Error) -> Self {
        SvmError::Io {
            path: path.into(),
            offset,
            source,
        }
    }
}
