//! Crate-wide error type.

use std::fmt;

use thiserror::Error;

use crate::io::PlyError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pipeline stage tags attached to errors raised during a reconstruction run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Extend,
    Density,
    Operator,
    Decompose,
    Solve,
    Grid,
    Evaluate,
    Extract,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Extend => "extend",
            Stage::Density => "density",
            Stage::Operator => "operator",
            Stage::Decompose => "decompose",
            Stage::Solve => "solve",
            Stage::Grid => "grid",
            Stage::Evaluate => "evaluate",
            Stage::Extract => "extract",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("site collision: {0}")]
    Collision(String),

    #[error("local factorization failed for subdomain {subdomain}")]
    Factorization { subdomain: usize },

    #[error(transparent)]
    Ply(#[from] PlyError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn at(self, stage: Stage) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The stage tag, if this error came out of the pipeline.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }

    /// Innermost error, with stage wrappers stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}
