use std::fmt;
use std::process::ExitCode;

/// Failure of a subcommand, mapped onto the documented exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or an invalid configuration (exit 2).
    Usage(String),
    /// Unreadable or malformed input (exit 3).
    Parse(String),
    /// Inputs parse but do not line up, e.g. results misaligned with ground
    /// truth (exit 4).
    Mismatch(String),
    /// Anything else, mostly failures writing outputs (exit 1).
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Self::Other(_) => 1,
            Self::Usage(_) => 2,
            Self::Parse(_) => 3,
            Self::Mismatch(_) => 4,
        })
    }

    pub fn output(path: &std::path::Path, e: impl fmt::Display) -> Self {
        Self::Other(format!("{}: {e}", path.display()))
    }

    pub fn input(path: &std::path::Path, e: impl fmt::Display) -> Self {
        Self::Parse(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) | Self::Parse(m) | Self::Mismatch(m) | Self::Other(m) => f.write_str(m),
        }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;
