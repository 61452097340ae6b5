use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the navigation toolkit.
#[derive(Debug, Error)]
pub enum NavError {
    #[error("state within {distance:e} of primary `{body}` (collision singularity)")]
    Singularity { body: &'static str, distance: f64 },

    #[error("integrator step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("integrator tolerance not met after {steps} steps at t = {t}")]
    ToleranceNotMet { steps: usize, t: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported orbit: {0}")]
    UnsupportedOrbit(String),

    #[error("non-causal timestamps: {0}")]
    NonCausalTimestamps(String),

    #[error("undefined observable: {0}")]
    UndefinedObservable(String),

    #[error("innovation covariance not positive ({value:e}) at epoch {epoch}")]
    InnovationNotPositive { value: f64, epoch: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("state already augmented with {0}")]
    AlreadyAugmented(&'static str),

    #[error("ephemeris: {0}")]
    Ephemeris(String),

    #[error("scenario config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = NavError> = std::result::Result<T, E>;
