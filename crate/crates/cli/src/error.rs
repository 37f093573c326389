use std::fmt;

use wavenet_core::Error;

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    /// A `verify` invariant or other post-condition failed.
    pub const CHECK_FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const DATA: i32 = 3;
    pub const DIVERGED: i32 = 4;
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self {
            code: exit::CONFIG,
            message: msg.into(),
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Self {
            code: exit::DATA,
            message: msg.into(),
        }
    }

    pub fn check(msg: impl Into<String>) -> Self {
        Self {
            code: exit::CHECK_FAILED,
            message: msg.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config(_)
            | Error::InvalidArgument(_)
            | Error::CalibrationRequired(_)
            | Error::EmptyCalibration
            | Error::MissingSchedule(_) => exit::CONFIG,
            Error::Diverged { .. } | Error::NonFiniteGradient { .. } => exit::DIVERGED,
            Error::Shape(_)
            | Error::CodeOutOfRange { .. }
            | Error::Format { .. }
            | Error::Checksum(_)
            | Error::Data(_)
            | Error::Io(_)
            | Error::Json(_) => exit::DATA,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e).into()
    }
}

pub type CliResult<T> = Result<T, CliError>;
