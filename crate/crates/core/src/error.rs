use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {cause}")]
    Io { path: PathBuf, cause: std::io::Error },

    #[error("hazard grid {path}: {message}")]
    HazardFormat { path: PathBuf, message: String },

    #[error("impact curve {path}: {message}")]
    CurveFormat { path: PathBuf, message: String },

    #[error("invalid impact curve: {0}")]
    InvalidCurve(String),

    #[error("invalid hazard grid: {0}")]
    InvalidGrid(String),

    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("no performance data")]
    NoPerformanceData,

    #[error("money conservation violated at step {step}: imbalance {imbalance:e}\n{dump}")]
    Conservation {
        step: u32,
        imbalance: f64,
        dump: String,
    },

    #[error("empty series")]
    EmptySeries,

    #[error("chart rendering failed: {0}")]
    Chart(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, cause: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            cause,
        }
    }
}
