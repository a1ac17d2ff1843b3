use std::io;
use std::process::ExitCode;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Numerical(krmap::Error),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl From<krmap::Error> for CliError {
    fn from(e: krmap::Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerical(e)
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody<'a>,
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) | CliError::Csv(_) => "io",
        }
    }

    /// 2 for configuration problems, 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Numerical(_) => ExitCode::from(3),
            CliError::Io(_) | CliError::Csv(_) => ExitCode::from(1),
        }
    }

    /// `{"error": {"kind": ..., "message": ...}}`.
    pub fn to_json(&self) -> String {
        let report = ErrorReport { error: ErrorBody { kind: self.kind(), message: self.to_string() } };
        serde_json::to_string(&report).unwrap_or_else(|_| format!("{{\"error\":{{\"kind\":\"{}\"}}}}", self.kind()))
    }
}
