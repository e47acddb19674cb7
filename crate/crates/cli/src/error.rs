use std::fmt;

/// Failures mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable, malformed or invalid input (exit 2).
    Input(String),
    /// The localization strategy ran but did not converge (exit 3).
    Strategy(String),
    /// A numerical failure inside the solver stack (exit 4).
    Numeric(String),
    /// Could not write results (exit 1).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Input(_) => 2,
            CliError::Strategy(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Strategy(m) => write!(f, "strategy failed: {m}"),
            CliError::Numeric(m) => write!(f, "numeric error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<beamloc::Error> for CliError {
    fn from(e: beamloc::Error) -> Self {
        match e {
            beamloc::Error::InvalidInput(_) => CliError::Input(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
