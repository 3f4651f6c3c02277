//! CLI error envelope: a machine-readable JSON object on stderr plus a
//! category-specific exit code.
//!
//! Exit codes: 0 success, 2 input error, 3 model/calibration error,
//! 4 validation failure.

use grabwatch::calibration::CalibrationError;
use grabwatch::geometry::GeometryError;
use grabwatch::ingestion::IngestError;
use grabwatch::reference_frame::ReferenceFrameError;
use grabwatch::simulator::SimulatorError;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Input,
    Model,
    Validation,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Input,
            message: message.into(),
        }
    }

    pub fn model(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Model,
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Validation,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Input => 2,
            ErrorKind::Model => 3,
            ErrorKind::Validation => 4,
        }
    }

    pub fn emit(&self) {
        #[derive(Serialize)]
        struct Envelope<'a> {
            error: Inner<'a>,
        }
        #[derive(Serialize)]
        struct Inner<'a> {
            kind: ErrorKind,
            message: &'a str,
        }
        let body = serde_json::to_string(&Envelope {
            error: Inner {
                kind: self.kind,
                message: &self.message,
            },
        })
        .expect("error envelope serializes");
        eprintln!("{body}");
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<ReferenceFrameError> for CliError {
    fn from(e: ReferenceFrameError) -> Self {
        // Too little or degenerate data is an input problem, not a model one.
        CliError::input(e.to_string())
    }
}

impl From<CalibrationError> for CliError {
    fn from(e: CalibrationError) -> Self {
        match e {
            CalibrationError::InsufficientData => CliError::input(e.to_string()),
            _ => CliError::model(e.to_string()),
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::model(e.to_string())
    }
}

impl From<SimulatorError> for CliError {
    fn from(e: SimulatorError) -> Self {
        CliError::input(e.to_string())
    }
}

/// IO helpers with the offending path in the message.
pub fn read_failed(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::input(format!("failed to read {}: {e}", path.display()))
}

pub fn write_failed(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::input(format!("failed to write {}: {e}", path.display()))
}
