//! Error type shared by all modules of the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid volume header {path}: {reason}")]
    InvalidHeader { path: PathBuf, reason: String },

    #[error("payload size mismatch for {path}: header implies {expected} bytes, found {found}")]
    PayloadSize {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value at voxel {index} in {path}")]
    NonFinitePayload { path: PathBuf, index: usize },

    #[error("volume invariant violated: {0}")]
    Invariant(String),

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("pass stack is empty")]
    EmptyPassStack,

    #[error("region of interest is empty")]
    EmptyRoi,

    #[error("graph has no labeled nodes (every ROI voxel is uncertain)")]
    NoLabeledNodes,

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("expectation dice is zero; relative improvement is undefined")]
    ZeroBaselineDice,
}
