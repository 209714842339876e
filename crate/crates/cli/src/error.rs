use std::fmt;

use serde_json::json;

/// Failure of a command, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed or inconsistent configuration (exit 2).
    Config(String),
    /// Reading or writing files failed (exit 1).
    Io(String),
    /// The computation ran but its certificate did not hold (exit 3).
    NotCertified(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io(_) => 1,
            Self::Config(_) => 2,
            Self::NotCertified(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Io(_) => "io",
            Self::Config(_) => "config",
            Self::NotCertified(_) => "not_certified",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Self::Io(m) | Self::Config(m) | Self::NotCertified(m) => m,
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> String {
        json!({ "error": self.kind(), "message": self.message(), "exit_code": self.exit_code() }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind(), self.message())
    }
}

impl std::error::Error for CliError {}

impl From<roughinc::Error> for CliError {
    fn from(e: roughinc::Error) -> Self {
        use roughinc::Error as E;
        match e {
            E::NoConvergence(_) | E::BoundExceeded { .. } => Self::NotCertified(e.to_string()),
            other => Self::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
