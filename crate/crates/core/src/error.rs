use roam_smt::{SmtError, SolverError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("constraint error: {0}")]
    Smt(#[from] SmtError),
    #[error("solver error: {0}")]
    Solver(#[from] SolverError),
    #[error("state serialization failed: {0}")]
    Serialize(String),
    #[error("state blob has format version {0}, this build reads version 1")]
    BlobVersion(u32),
    #[error("state blob was produced by platform `{found}`, expected `{expected}`")]
    BlobPlatform { expected: String, found: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
}
