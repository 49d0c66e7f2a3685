use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DmaError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("user count K = {k} exceeds total element count N = {n}")]
    TooManyUsers { k: usize, n: usize },

    #[error("bit resolution must be at least 1")]
    ZeroBits,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("alternating design failed at iteration {iteration}: {source}")]
    Design {
        iteration: usize,
        #[source]
        source: Box<DmaError>,
    },

    #[error("experiment point {sweep_value} (bits {bits}) had no successful trials")]
    NoSuccessfulTrials { sweep_value: f64, bits: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

pub type Result<T, E = DmaError> = std::result::Result<T, E>;

impl DmaError {
    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        DmaError::Numerical(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        DmaError::InvalidParameter(msg.into())
    }
}
