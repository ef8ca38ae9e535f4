use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("data mismatch: {0}")]
    Mismatch(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Mismatch(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

/// Errors from reading measurement or field files.
pub(crate) fn data(e: dsm_core::Error) -> CliError {
    match e {
        dsm_core::Error::Io(e) => CliError::Other(e.to_string()),
        other => CliError::Mismatch(other.to_string()),
    }
}

/// Errors from the numerical pipeline.
pub(crate) fn numeric(e: dsm_core::Error) -> CliError {
    match e {
        dsm_core::Error::Io(e) => CliError::Other(e.to_string()),
        dsm_core::Error::GridMismatch(m) => CliError::Mismatch(m),
        other => CliError::Numeric(other.to_string()),
    }
}
