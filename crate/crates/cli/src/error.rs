use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Schema(String),

    #[error(transparent)]
    Core(#[from] linchaos::Error),

    /// A detector or construction ran and did not accept.
    #[error("{0}")]
    Rejected(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 schema/invalid input, 3 rejection, 4 budget, 1 I/O.
    pub fn exit_code(&self) -> u8 {
        use linchaos::Error as E;
        match self {
            CliError::Schema(_) => 2,
            CliError::Rejected(_) => 3,
            CliError::Io { .. } => 1,
            CliError::Core(e) => match e {
                E::Budget { .. } => 4,
                E::Precondition(_) | E::Selection { .. } | E::Violation { .. } => 3,
                E::Invalid(_) | E::ReversedRange { .. } | E::SupportOutOfRange { .. } | E::Unsupported(_) | E::Unbounded(_) => 2,
            },
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
