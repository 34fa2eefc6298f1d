use thiserror::Error;

/// Failure of a command, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("data: {0}")]
    Data(String),
    #[error("numeric: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<egw::Error> for CliError {
    fn from(e: egw::Error) -> Self {
        use egw::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidConfig(_) | E::NotDecomposable | E::SeedRequired => CliError::Usage(msg),
            E::Parse(_)
            | E::DimensionMismatch(_)
            | E::SupportViolation(..)
            | E::InvalidPair(..) => CliError::Data(msg),
            E::NotPd(_) | E::NoConvergence { .. } | E::EmptyChain | E::DegenerateDraw(_) => {
                CliError::Numeric(msg)
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
