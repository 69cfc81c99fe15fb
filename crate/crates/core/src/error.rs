use std::path::PathBuf;

use thiserror::Error;

use crate::types::TimeNs;

#[derive(Debug, Error)]
pub enum Error {
    #[error("causality violation: send time {send} is earlier than kernel time {now}")]
    Causality { send: TimeNs, now: TimeNs },

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("snapshot level mismatch: simulated has {simulated} levels, target has {target}")]
    LevelMismatch { simulated: usize, target: usize },

    #[error("oracle has no reference for asset {asset} at or before t={time}")]
    NoReference { asset: usize, time: TimeNs },

    #[error("unknown agent type `{0}`")]
    UnknownAgentType(String),

    #[error("matching worker failed: {0}")]
    Worker(String),

    #[error("output directory {} already exists (use --force)", .0.display())]
    OutputExists(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parse(path: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), line, msg: msg.into() }
    }
}
