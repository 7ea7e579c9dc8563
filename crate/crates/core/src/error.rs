use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the sensing pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("negative frequency {0} rad/s")]
    NegativeFrequency(f64),

    #[error("line spectrum has no spectral density")]
    LineSpectrum,

    #[error("empty frequency band [{lo}, {hi}] rad/s")]
    EmptyBand { lo: f64, hi: f64 },

    #[error("quadrature did not reach tolerance: estimate {value:e}, error estimate {error:e}")]
    QuadratureTolerance { value: f64, error: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NotConverged { sweeps: usize, off_norm: f64 },

    #[error("all {count} modes truncated at relative threshold {epsilon:e}")]
    AllModesTruncated { count: usize, epsilon: f64 },

    #[error("zero vector cannot be normalized")]
    ZeroVector,

    #[error("config error: {0}")]
    Config(String),

    #[error("missing input {path}: run the `{stage}` stage first")]
    MissingInput { path: PathBuf, stage: &'static str },

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// True for errors caused by user input (config, files) rather than numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::InvalidParameter { .. }
                | Error::InvalidRange(_)
                | Error::EmptyBand { .. }
                | Error::MissingInput { .. }
                | Error::MissingData(_)
                | Error::Io { .. }
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
