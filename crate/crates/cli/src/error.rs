use std::fmt;

use eigenoverlap::Error;

pub type CliResult<T> = Result<T, CliError>;

/// Failure of a subcommand, carrying the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed files, flags or inconsistent configuration (exit 2).
    Input(String),
    /// Solver or numerical breakdown (exit 3).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            e if e.is_input_error() => CliError::Input(e.to_string()),
            Error::Unresolved { .. } => CliError::Numerical(format!(
                "{e} (hint: increase --complement-points/--target-points or use an interval grid)"
            )),
            e => CliError::Numerical(e.to_string()),
        }
    }
}
