use std::fmt;

/// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(omicsnet::error::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<omicsnet::error::Error> for CliError {
    fn from(e: omicsnet::error::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(omicsnet::error::Error::Io(e))
    }
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> CliError {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        use omicsnet::error::Error;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(Error::Numeric(_)) => 4,
            CliError::Core(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
