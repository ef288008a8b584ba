use thiserror::Error;

/// Exit status for bad flags, configs or inputs.
pub const EXIT_USAGE: i32 = 2;
/// Exit status when training hits a non-finite loss or gradient.
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] bicogan_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(bicogan_core::Error::Numeric(_)) => EXIT_NUMERIC,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
