use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the kernel, field, solver, expansion and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("kernel tabulation failed: {0}")]
    Tabulation(String),

    #[error("kernel evaluation failed: {0}")]
    Evaluation(String),

    #[error("box too small: {0}")]
    BoxTooSmall(String),

    #[error("time resolution too coarse: {0}")]
    TimeResolution(String),

    #[error("solution blew up at t = {t} (last valid time {last_valid})")]
    BlowUp { t: f64, last_valid: f64 },

    #[error("step refinement did not converge: {0}")]
    StepRefinement(String),

    #[error("tail extrapolation failed: {0}")]
    TailExtrapolation(String),

    #[error("form disagreement: {0}")]
    FormDisagreement(String),

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("no sample times")]
    NoSampleTimes,

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
