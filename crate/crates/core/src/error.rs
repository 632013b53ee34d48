use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("eigensolver did not converge for sector k={sector} (dimension {dim})")]
    NoConvergence { sector: usize, dim: usize },

    #[error("degenerate normalization: grid is constant")]
    DegenerateNormalization,

    #[error("value {0} saturates the model-space inverse")]
    Saturated(f64),

    #[error("query cell is degenerate: {0}")]
    DegenerateCell(String),

    #[error("point ({0}, {1}) lies outside the interpolation hull")]
    OutsideHull(f64, f64),

    #[error("integrand guard: {0}")]
    IntegrandGuard(String),

    #[error("empty selection: {0}")]
    Empty(String),

    #[error("non-finite value during training at epoch {epoch}, batch {batch}: {what}")]
    NonFinite { epoch: usize, batch: usize, what: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
