//! Runner errors mapped to exit codes and a machine-readable payload.

use serde::Serialize;
use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad or inconsistent configuration; exit code 2.
    Config(String),
    /// A numeric operation failed during the run; exit code 3.
    Numeric(String),
    /// Filesystem trouble; exit code 1.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numeric(_) => "numeric",
            CliError::Io(_) => "io",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numeric(m) | CliError::Io(m) => m,
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Payload<'a> {
            error: &'a str,
            kind: &'a str,
            exit_code: i32,
        }
        serde_json::to_string(&Payload {
            error: self.message(),
            kind: self.kind(),
            exit_code: self.exit_code(),
        })
        .unwrap_or_else(|_| format!("{{\"error\":\"{}\"}}", self.kind()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind(), self.message())
    }
}

impl std::error::Error for CliError {}

/// Core failures during the run phase are numeric failures.
impl From<gdl_core::Error> for CliError {
    fn from(e: gdl_core::Error) -> Self {
        CliError::Numeric(e.to_string())
    }
}
