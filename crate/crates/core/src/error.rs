use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid bandwidth {0}: must be positive and finite")]
    Bandwidth(f64),

    #[error("k = {k} is too large for n = {n} samples (need k <= n - 1)")]
    KTooLarge { k: usize, n: usize },

    #[error("k must be at least 1")]
    KInvalid,

    #[error("sample index {index} out of range for n = {n}")]
    Index { index: usize, n: usize },

    #[error("labels must contain both classes (got {n_pos} anomalies, {n_neg} normals)")]
    SingleClass { n_pos: usize, n_neg: usize },

    #[error("non-finite value {value} at sample {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("labels required for this operation")]
    MissingLabels,

    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("invalid synthetic spec: {0}")]
    Spec(String),

    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: row {row}: label {value:?} is not 0 or 1")]
    Label { path: PathBuf, row: usize, value: String },

    #[error("{0}: no data rows")]
    Empty(PathBuf),

    #[error("{path}: {message}")]
    Column { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
