//! Error type shared by every module in the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Dimension or length mismatch between operands.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Cholesky factorization failed even after the jitter ladder.
    #[error("matrix not positive definite after jitter {attempted_jitter:e}")]
    Decomposition { attempted_jitter: f64 },

    /// A computation produced NaN or infinity.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// Task id not present in the pool.
    #[error("unknown task id {0}")]
    UnknownTask(usize),

    /// The oracle was asked to label a task twice.
    #[error("task {0} is already labeled")]
    AlreadyLabeled(usize),

    /// Selection was attempted on an empty candidate pool.
    #[error("no unlabeled tasks remain in the pool")]
    EmptyPool,

    /// Invalid configuration; the message names the offending field.
    #[error("invalid config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),

    /// CSV input that does not match the harness schema.
    #[error("csv parse error at line {line}: {msg}")]
    CsvParse { line: usize, msg: String },
}

impl Error {
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
