use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("{0}")]
    Validation(String),
    #[error("missing artifacts in {}: {}", .dir.display(), .missing.join(", "))]
    MissingArtifacts { dir: PathBuf, missing: Vec<String> },
    #[error("{}: row {row}: {reason}", .file.display())]
    Corrupt { file: PathBuf, row: u64, reason: String },
    #[error("invalid input: {0}")]
    Input(gradpush::Error),
    #[error(transparent)]
    Core(#[from] gradpush::Error),
    #[error("run diverged: {0}")]
    Diverged(gradpush::Error),
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{failed} of {total} sweep cells failed")]
    PartialSweep { failed: usize, total: usize },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_)
            | Self::Validation(_)
            | Self::MissingArtifacts { .. }
            | Self::Corrupt { .. }
            | Self::Input(_) => 2,
            Self::Core(_) | Self::Diverged(_) | Self::Io { .. } => 3,
            Self::PartialSweep { .. } => 4,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
