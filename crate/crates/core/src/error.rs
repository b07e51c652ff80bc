use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HistError>;

#[derive(Debug, Error)]
pub enum HistError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("invalid histogram: {0}")]
    InvalidHistogram(String),

    #[error("invalid coefficient index {index} (valid range 1..={max})")]
    InvalidIndex { index: usize, max: usize },

    #[error("dense materialization needs {cells} cells, limit is {limit}")]
    CellLimitExceeded { cells: u128, limit: usize },

    #[error("length {0} is not a power of two")]
    NonDyadic(usize),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("no observations")]
    NoData,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}:{line}: value {value} outside [1, {max}] in column {column}")]
    OutOfRange {
        path: PathBuf,
        line: usize,
        column: usize,
        value: i64,
        max: usize,
    },

    #[error("experiment failed (method={method}, {sweep_var}={sweep_value}, seed={seed}): {source}")]
    Experiment {
        method: String,
        sweep_var: String,
        sweep_value: usize,
        seed: u64,
        #[source]
        source: Box<HistError>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HistError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HistError::Io {
            path: path.into(),
            source,
        }
    }
}
