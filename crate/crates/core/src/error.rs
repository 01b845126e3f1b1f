use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("cannot impute curve {curve}: only {observed} observed points (need at least 4)")]
    Imputation { curve: usize, observed: usize },
    #[error("unsupported derivative order {0} (expected 1 or 2)")]
    UnsupportedOrder(u8),
    #[error("degenerate scale: zero variance with a point away from the mean")]
    DegenerateScale,
    #[error("invalid bandwidth {0}")]
    Bandwidth(f64),
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("common support required: {0}")]
    CommonSupport(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
