use thiserror::Error;

/// Process exit code for data and validation errors.
pub const EXIT_DATA: i32 = 2;
/// Process exit code for solver failures.
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Data(String),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] gibbsfit::Error),
}

impl CliError {
    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_solver_failure() => EXIT_SOLVER,
            _ => EXIT_DATA,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(format!("CSV: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(format!("JSON: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
