use thiserror::Error;

/// Input errors; all map to exit code 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("malformed spec: {0}")]
    Parse(String),
    #[error("invalid input at {0}: {1}")]
    Validation(String, hk_dichotomy::Error),
    #[error("invalid input at {0}: {1}")]
    Invalid(String, String),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn validation(location: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Invalid(location.into(), message.into())
    }
}
