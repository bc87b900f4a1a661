use std::path::PathBuf;

use thiserror::Error;

use crate::ltl::ParseError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("closure exceeds cap of {cap} formulas (reached {size})")]
    ClosureCap { cap: usize, size: usize },
    #[error("formula `{0}` is not in the task closure")]
    NotInClosure(String),
    #[error("mapping specification does not match evaluator: {0}")]
    SpecMismatch(String),
    #[error("specification set is missing occurrence `{0}`")]
    MissingSpec(String),
    #[error("cannot step a terminal product state")]
    TerminalStep,
    #[error("curriculum level {level} out of range 1..={max}")]
    LevelOutOfRange { level: usize, max: usize },
    #[error("evaluation summary is missing task `{0}`")]
    MissingTask(String),
    #[error("non-finite loss at update {update}: {detail}")]
    NonFiniteLoss { update: usize, detail: String },
    #[error("checkpoint mismatch: {0}")]
    CheckpointMismatch(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
