use std::process::ExitCode;

/// Failure of a command, classified by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration, arguments or input files (exit 1).
    #[error("{0}")]
    Validation(String),
    /// A solver or property check failed (exit 2).
    #[error("{0}")]
    Numerical(String),
    /// Reading or writing files failed (exit 3).
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        CliError::Numerical(msg.into())
    }
}

impl From<nsregret::Error> for CliError {
    fn from(e: nsregret::Error) -> Self {
        use nsregret::Error as E;
        match e {
            E::Io(io) => CliError::Io(io.to_string()),
            E::Numerical(_) | E::NoConvergence { .. } | E::NonFinite(_) => CliError::Numerical(e.to_string()),
            E::Parse { line, message } => CliError::Validation(format!("line {line}: {message}")),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
