use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = LandauError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LandauError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("kernel unresolved: decrease n or refine grid ({0})")]
    KernelUnresolved(String),

    #[error("mollifier unresolved: {0}")]
    MollifierUnresolved(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("problem too large for direct summation: {0}")]
    TooLarge(String),

    #[error("positivity lost: reduce dt or refine grid (t = {t}, min f = {min:e}, max f = {max:e})")]
    PositivityLost { t: f64, min: f64, max: f64 },

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("insufficient records: {0}")]
    InsufficientRecords(String),

    #[error("window exceeded: {0}")]
    WindowExceeded(String),

    #[error("config error: {key}: {message}")]
    Config { key: String, message: String },

    #[error("schema error: {message}\nexpected header: {expected}")]
    Schema { message: String, expected: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl LandauError {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        LandauError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LandauError::Io {
            path: path.into(),
            source,
        }
    }
}
