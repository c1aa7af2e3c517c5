use std::path::PathBuf;

use thiserror::Error;

use crate::corpus::PointKey;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate record key {0}")]
    DuplicateKey(PointKey),

    #[error("expected dimension {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("vector {0} has no matching record")]
    OrphanVector(PointKey),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("degenerate vector (norm {0:e})")]
    DegenerateVector(f64),

    #[error("need at least {needed} values, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("cannot build an index over zero points")]
    EmptyIndex,

    #[error("graph degree {degree} needs more than {degree} points, got {points}")]
    UnderfullGraph { degree: usize, points: usize },

    #[error("recall@{k} needs {k} ground-truth neighbors, got {got}")]
    InsufficientGroundTruth { k: usize, got: usize },

    #[error("eligible population of {population} is smaller than sample size {requested}")]
    InsufficientPopulation { population: usize, requested: usize },

    #[error("no vector for {0}")]
    MissingRepresentation(PointKey),

    #[error("retrieval pool holds {available} points, need {k}")]
    InsufficientPool { available: usize, k: usize },

    #[error("distance {0} outside [0, 2]")]
    Range(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
