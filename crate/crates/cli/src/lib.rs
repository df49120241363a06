//! Commands behind the `pcb` binary and the annotation server.

pub mod commands;
pub mod server;

use std::path::PathBuf;

use pcb_core::harness::HarnessError;
use pcb_core::pcb::PcbError;
use pcb_core::stats::StatsError;

/// Exit status for scripting: 0 success, 1 runtime failure, 2 usage or
/// validation error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Failure = 1,
    Usage = 2,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failure(String),
    #[error(transparent)]
    Pcb(#[from] PcbError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

pub type Result<T> = std::result::Result<T, CliError>;

fn pcb_is_usage(e: &PcbError) -> bool {
    matches!(
        e,
        PcbError::InvalidAnnotation(_)
            | PcbError::InvalidManifest(_)
            | PcbError::UnknownLabel(_)
            | PcbError::MissingAnnotation(_)
            | PcbError::Synth(_)
            | PcbError::Config(_)
            | PcbError::Json { .. }
    )
}

impl CliError {
    pub fn exit_status(&self) -> ExitStatus {
        let usage = match self {
            CliError::Usage(_) => true,
            CliError::Failure(_) | CliError::Io { .. } => false,
            CliError::Pcb(e) => pcb_is_usage(e),
            CliError::Harness(e) => match e {
                HarnessError::Pcb(p) => pcb_is_usage(p),
                HarnessError::Config(_)
                | HarnessError::Split(_)
                | HarnessError::EmptyClass(_)
                | HarnessError::NoResults(_) => true,
                _ => false,
            },
            CliError::Stats(e) => matches!(
                e,
                StatsError::Empty | StatsError::InvalidAlpha(_) | StatsError::MissingCell { .. }
            ),
        };
        if usage {
            ExitStatus::Usage
        } else {
            ExitStatus::Failure
        }
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
