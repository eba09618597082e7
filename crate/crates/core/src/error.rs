use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input data; `line` is the 1-based line of the source file.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("{0}")]
    Validation(String),

    #[error("region index {index} out of range ({n_regions} regions)")]
    InvalidRegion { index: usize, n_regions: usize },

    #[error("feature vector has {got} entries, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("only one class present: {0}")]
    SingleClass(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        match err.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::validation(format!("csv error: {other:?}")),
        }
    }
}
