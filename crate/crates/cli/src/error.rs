use std::path::PathBuf;

use romclose::RomError;
use thiserror::Error;

/// CLI failures, each mapped to a process exit code:
/// 0 success, 2 invalid config, 3 missing or unusable upstream artifact,
/// 4 numerical failure, 5 I/O.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),

    #[error("missing upstream artifact: {0} (run the producing stage first)")]
    UpstreamMissing(PathBuf),

    #[error("{0}")]
    Core(#[from] RomError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigInvalid(_) => 2,
            CliError::UpstreamMissing(_) => 3,
            CliError::Core(err) => match err {
                // A mismatched or corrupt artifact means the upstream stage
                // output is unusable, same remedy as a missing one.
                RomError::VersionMismatch { .. } | RomError::MalformedArtifact(_) => 3,
                RomError::IoFailure(_) => 5,
                _ => 4,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
