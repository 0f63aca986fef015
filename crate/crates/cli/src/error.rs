use std::fmt;

/// Failure classes, each with its own process exit status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Validation(String),
    Fit(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Fit(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Fit(m) => write!(f, "fit failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<twophoton::Error> for CliError {
    fn from(e: twophoton::Error) -> Self {
        match e {
            twophoton::Error::Fit { reason, iterations } => CliError::Fit(format!("{reason} (after {iterations} iterations)")),
            twophoton::Error::Domain(m) | twophoton::Error::Config(m) => CliError::Validation(m),
        }
    }
}
