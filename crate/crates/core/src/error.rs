use thiserror::Error;

use crate::engine::SimOutcome;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which resource limit a run exceeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CapKind {
    ActiveFrogs,
    Vertices,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown vertex handle {0}")]
    UnknownVertex(u32),

    #[error("unknown vertex name `{0}`")]
    UnknownName(String),

    #[error("interned vertex limit {0} reached")]
    VertexLimit(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("no path stored for frog ({origin}, {index})")]
    MissingPath { origin: String, index: u32 },

    #[error("resource cap exceeded ({kind:?}) at step {step}")]
    Capped {
        kind: CapKind,
        step: u64,
        partial: Box<SimOutcome>,
    },
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
