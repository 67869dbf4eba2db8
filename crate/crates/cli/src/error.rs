use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Input { path: PathBuf, source: quasibel::Error },
    #[error("cannot write {}: {source}", path.display())]
    Output { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] quasibel::Error),
    #[error("{failed} of {total} checks failed")]
    ChecksFailed { failed: usize, total: usize },
}

impl CliError {
    /// 2 for anything the caller got wrong, 1 for failures of the computation.
    pub fn exit_code(&self) -> u8 {
        use quasibel::Error as E;
        match self {
            CliError::Usage(_) | CliError::Input { .. } | CliError::Output { .. } => 2,
            CliError::Core(
                E::InvalidArgument(_)
                | E::InvalidGrid(_)
                | E::SupportAtBoundary(_)
                | E::SupportOutsideDomain(_)
                | E::NonPeriodic(_)
                | E::UnknownCheck(_)
                | E::Format(_)
                | E::Io(_)
                | E::Json(_),
            ) => 2,
            CliError::Core(_) | CliError::ChecksFailed { .. } => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
