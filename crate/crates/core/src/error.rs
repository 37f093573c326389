use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("INT8 execution requires calibration data ({0})")]
    CalibrationRequired(String),

    #[error("calibration set is empty")]
    EmptyCalibration,

    #[error("audio code {code} out of range 0..{channels}")]
    CodeOutOfRange { code: i64, channels: usize },

    #[error("non-finite gradient in `{tensor}` at step {step}")]
    NonFiniteGradient { tensor: String, step: usize },

    #[error("training diverged at step {step}: loss = {loss}")]
    Diverged { step: usize, loss: f64 },

    #[error("missing pruning schedule for `{0}`")]
    MissingSchedule(String),

    #[error("malformed {kind} file: {reason}")]
    Format { kind: &'static str, reason: String },

    #[error("checksum mismatch in blob `{0}`")]
    Checksum(String),

    #[error("dataset error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
