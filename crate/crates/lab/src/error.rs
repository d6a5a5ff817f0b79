use std::path::PathBuf;

use parabolic_core::ErrorKind;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] parabolic_core::Error),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed data file {path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("acceptance failed: {0}")]
    Acceptance(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

/// Machine-readable failure written next to the reports.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub class: &'static str,
    pub exit_code: u8,
    pub message: String,
}

impl LabError {
    pub fn config(msg: impl Into<String>) -> Self {
        LabError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> &'static str {
        match self {
            LabError::Config(_) => "validation",
            LabError::Core(e) if e.kind == ErrorKind::Validation => "validation",
            LabError::Core(_) => "numerical",
            LabError::Io { .. } | LabError::Format { .. } => "io",
            LabError::Acceptance(_) => "acceptance",
        }
    }

    /// 2 for rejected input, 3 for failed computations and IO, 4 for failed acceptance criteria.
    pub fn exit_code(&self) -> u8 {
        match self.class() {
            "validation" => 2,
            "acceptance" => 4,
            _ => 3,
        }
    }

    pub fn record(&self) -> ErrorRecord {
        ErrorRecord {
            class: self.class(),
            exit_code: self.exit_code(),
            message: self.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_error_class() {
        assert_eq!(LabError::config("x").exit_code(), 2);
        assert_eq!(
            LabError::from(parabolic_core::Error::validation("x")).exit_code(),
            2
        );
        assert_eq!(
            LabError::from(parabolic_core::Error::numerical("x")).exit_code(),
            3
        );
        assert_eq!(LabError::Acceptance("x".into()).exit_code(), 4);
        let rec = LabError::config("bad key").record();
        assert_eq!((rec.class, rec.exit_code), ("validation", 2));
    }
}
