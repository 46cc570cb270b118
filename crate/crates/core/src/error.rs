use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("class index {index} out of range for {classes} classes")]
    ClassOutOfRange { index: usize, classes: usize },

    #[error("feature index {index} out of range for dimension {dim}")]
    FeatureOutOfRange { index: usize, dim: usize },

    #[error("differential distance needs two distinct classes, got ({0}, {0})")]
    SameClassPair(usize),

    #[error("gain profile entry {index} is negative ({value})")]
    NegativeGain { index: usize, value: f64 },

    #[error("mixture gain must be non-negative, got {0}")]
    NegativeMixtureGain(f64),

    #[error("quadrature did not reach tolerance {tol:e} (estimated error {estimate:e})")]
    QuadratureNonConvergent { tol: f64, estimate: f64 },

    #[error("calibration grid is empty")]
    EmptyGrid,

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("{path}:{line}: {msg}")]
    Config { path: String, line: usize, msg: String },

    #[error("config: {0}")]
    ConfigValue(String),

    #[error("no trial logs to aggregate")]
    EmptyLogs,

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
