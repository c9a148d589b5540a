use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or parameters; exit status 2.
    #[error("usage: {0}")]
    Usage(String),
    /// A result failed a numerical check; exit status 3.
    #[error("numerical guard: {0}")]
    Numerical(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("manifest: {0}")]
    Manifest(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Manifest(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    /// Maps a library error raised while handling `field`.
    pub fn from_core(field: &str, e: fiid::Error) -> Self {
        use fiid::Error as E;
        match e {
            E::InvalidInput(_) | E::InconsistentProfile { .. } | E::Constraint(_) | E::TooLarge(_) => {
                CliError::Usage(format!("{field}: {e}"))
            }
            E::RadiusTooSmall { .. } | E::ConditioningNotObserved { .. } | E::NoCrossing { .. } => {
                CliError::Numerical(format!("{field}: {e}"))
            }
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
