use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A user-supplied parameter lies outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("removable singularity: {variant} evaluated at H = {h}")]
    Singularity { variant: &'static str, h: f64 },

    #[error("quadrature did not converge: estimate {estimate:e}, error {abs_error:e} > tolerance {tolerance:e} after {intervals} intervals")]
    Quadrature {
        estimate: f64,
        abs_error: f64,
        tolerance: f64,
        intervals: usize,
    },

    #[error("simulation failed: {0}")]
    Simulation(String),

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("estimation failed at index {index}: {reason}")]
    Estimation { index: usize, reason: String },

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("data error{}: {reason}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Data { line: Option<usize>, reason: String },

    #[error("{instrument}: {source}")]
    Instrument {
        instrument: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by an out-of-domain user parameter rather than by
    /// the data or the environment.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::InvalidParameter(_) => true,
            Error::Instrument { source, .. } => source.is_usage(),
            _ => false,
        }
    }
}
