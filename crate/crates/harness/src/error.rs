use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Model(#[from] pudsim_core::Error),

    #[error("invalid experiment config: {0}")]
    Config(String),

    #[error("failed to parse experiment config: {0}")]
    Parse(String),

    #[error("nothing to export")]
    EmptyReports,

    #[error("cannot write {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl HarnessError {
    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    /// Validation problems, as opposed to failures while running.
    pub fn is_validation(&self) -> bool {
        match self {
            Self::Config(_) | Self::Parse(_) => true,
            Self::Model(e) => matches!(
                e,
                pudsim_core::Error::InvalidProfile(_)
                    | pudsim_core::Error::UnknownPreset(_)
                    | pudsim_core::Error::ProfileParse(_)
                    | pudsim_core::Error::UnknownPattern(_)
                    | pudsim_core::Error::EnvironmentOutOfRange { .. }
                    | pudsim_core::Error::BadDelay(_)
            ),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
