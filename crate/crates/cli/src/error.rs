//! Two-way split of command failures, mirrored in the process exit code:
//! usage problems (bad flags, malformed or invalid config, missing required
//! settings) exit 2; everything that goes wrong while doing the work
//! (unreadable inputs, integrity failures, infeasible plans) exits 1.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Caller misuse: exit code 2.
    Usage(String),
    /// Failure during execution: exit code 1.
    Runtime(String),
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        CliError::Runtime(message.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<shelfgen::Error> for CliError {
    fn from(e: shelfgen::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
