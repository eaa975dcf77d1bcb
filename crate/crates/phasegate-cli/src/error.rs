use thiserror::Error;

/// Failures mapped onto the documented exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Param(String),
    #[error("{0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io(_) => 2,
            Self::Param(_) => 3,
            Self::Validation(_) => 4,
        }
    }
}

impl From<phasegate::Error> for CliError {
    fn from(e: phasegate::Error) -> Self {
        match e {
            phasegate::Error::Io(_) | phasegate::Error::Format(_) => Self::Io(e.to_string()),
            other => Self::Param(other.to_string()),
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

pub fn param<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Param(msg.into()))
}
