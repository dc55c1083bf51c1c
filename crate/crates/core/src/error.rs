use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value at weight entry ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("{0} is empty")]
    Empty(&'static str),

    #[error("cannot compare versions of different libraries: {0} vs {1}")]
    BaseNameMismatch(String, String),

    #[error("model/vocabulary mismatch: {0}")]
    ModelMismatch(String),

    #[error("unknown report: {0}")]
    UnknownReport(String),

    #[error("report {0} has already been confirmed")]
    AlreadyConfirmed(String),

    #[error("report {0} is not at the head of the queue")]
    OutOfOrder(String),

    #[error("unknown label: {0}")]
    UnknownLabel(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
