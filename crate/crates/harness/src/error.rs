use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// One configuration problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// 1-based line in the configuration file, when known.
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: ")?,
            None => write!(f, "(no line): ")?,
        }
        if !self.key.is_empty() {
            write!(f, "{}: ", self.key)?;
        }
        f.write_str(&self.message)
    }
}

fn join(d: &[Diagnostic]) -> String {
    d.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration:\n{}", join(.0))]
    Config(Vec<Diagnostic>),

    #[error("mode {mode} needs a pretrained checkpoint, none found at {}", path.display())]
    MissingCheckpoint { mode: String, path: PathBuf },

    #[error("checkpoint {} does not match the configuration: {reason}", path.display())]
    CheckpointMismatch { path: PathBuf, reason: String },

    #[error("refusing to aggregate trials from different configurations ({0} vs {1})")]
    MixedConfigs(String, String),

    #[error("cannot aggregate: {0}")]
    Aggregate(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] aloha_core::CoreError),

    #[error(transparent)]
    Neural(#[from] aloha_neural::NeuralError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
