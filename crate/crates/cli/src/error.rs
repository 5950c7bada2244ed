use std::path::PathBuf;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("could not parse config: {0}")]
    Parse(String),
    #[error(transparent)]
    Engine(#[from] feller_core::Error),
    #[error("validation failed: {0}")]
    ValidationFailed(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 0 success, 2 config error, 3 numerical blow-up, 4 validation
    /// failure, 1 anything else.
    pub fn exit_code(&self) -> u8 {
        use feller_core::Error as E;
        match self {
            CliError::Config { .. } | CliError::Parse(_) => 2,
            CliError::Engine(E::BlowUp { .. }) => 3,
            CliError::Engine(
                E::InvalidParameter { .. }
                | E::NegativeTime(_)
                | E::GridMismatch(_)
                | E::UnboundedCoefficient { .. }
                | E::DisplacementOutOfGrid { .. }
                | E::NoSamplingLaw(_),
            ) => 2,
            CliError::ValidationFailed(_) => 4,
            CliError::Engine(_) | CliError::Io { .. } => 1,
        }
    }
}
