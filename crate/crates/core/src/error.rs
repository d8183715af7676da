use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = SpiError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SpiError {
    #[error("time grid must contain at least one time point")]
    EmptyGrid,
    #[error("time grid is not strictly increasing at index {index} ({previous} >= {current})")]
    NonIncreasingGrid {
        index: usize,
        previous: f64,
        current: f64,
    },
    #[error("row {row} has {found} values, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("value {value} at row {row}, column {column} is outside [0, 1]")]
    OutOfRange { row: usize, column: usize, value: f64 },
    #[error("row {row} increases by {increase:e} between columns {column} and {}", column + 1)]
    NotMonotone {
        row: usize,
        column: usize,
        increase: f64,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("time grids differ between band and samples")]
    GridMismatch,
    #[error("sample matrix has no rows")]
    EmptyMatrix,
    #[error("need at least {required} samples, got {found}")]
    TooFewSamples { required: usize, found: usize },
    #[error("input is empty")]
    EmptyInput,
    #[error("miscoverage level must lie strictly between 0 and 1, got {0}")]
    InvalidAlpha(f64),
    #[error("invalid band: {0}")]
    InvalidBand(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("baseline width is zero while width is {0}")]
    ZeroBaseline(f64),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl SpiError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SpiError::Io {
            path: path.into(),
            source,
        }
    }
}
