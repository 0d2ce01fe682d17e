use std::path::PathBuf;

use lossindex_core::{Error as CoreError, Stage};

/// Front-end failures. Every variant maps onto a process exit status via
/// [`CliError::exit_code`].
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: CoreError,
    },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(vec![msg.into()])
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Parse { path: path.into(), message: message.into() }
    }

    /// 1 config, 2 data, 3 estimation, 4 pricing, 5 risk.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io { .. } | CliError::Parse { .. } => 2,
            CliError::Stage { source, .. } => match source.stage() {
                Stage::Data => 2,
                Stage::Estimation => 3,
                Stage::Pricing => 4,
                Stage::Risk => 5,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Attaches a stage name to core errors.
pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for lossindex_core::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|source| CliError::Stage { stage, source })
    }
}
