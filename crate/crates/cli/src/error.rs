use std::path::PathBuf;

/// Everything a subcommand can fail with, mapped onto process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] piv_rpca::Error),

    #[error("{}: {message}", path.display())]
    Report { path: PathBuf, message: String },
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    /// 2 invalid input or arguments, 3 I/O, 4 numerical failure.
    pub fn exit_code(&self) -> u8 {
        use piv_rpca::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Report { .. } => 3,
            CliError::Core(e) => match e {
                E::InvalidArgument(_) | E::ShapeMismatch { .. } => 2,
                E::Io { .. } | E::Format { .. } | E::DimensionMismatch { .. } | E::EmptyInput { .. } => 3,
                E::Divergence { .. } | E::Factorization { .. } => 4,
            },
        }
    }
}
