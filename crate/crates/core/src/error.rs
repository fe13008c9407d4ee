use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("scenario lasts {scene_s} s but the campaign needs {needed_s} s")]
    ScenarioTooShort { scene_s: f64, needed_s: f64 },

    #[error("phase design stalled at {papr_db:.3} dB PAPR after {iterations} iterations")]
    PaprNotReached { papr_db: f64, iterations: usize },

    #[error("calibration response has a zero entry at tone {0}")]
    ZeroCalibration(usize),

    #[error("bad measurement file: {0}")]
    Format(String),

    #[error("missing input: {0}")]
    Missing(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Error {
    Error::Invalid {
        what,
        reason: reason.into(),
    }
}
