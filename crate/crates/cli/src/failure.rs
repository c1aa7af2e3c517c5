//! Error classification: every failure carries the stage it happened in and
//! maps to an exit code.

use std::fmt;

use xldrift_core::Error as CoreError;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_COMPUTE: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Load,
    Index,
    Sample,
    Analyze,
    Project,
    Synth,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Load => "load",
            Stage::Index => "index",
            Stage::Sample => "sample",
            Stage::Analyze => "analyze",
            Stage::Project => "project",
            Stage::Synth => "synth",
            Stage::Write => "write",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Usage,
    Data,
    Compute,
}

/// A failed stage. The underlying error is kept as the `source`.
#[derive(Debug)]
pub struct Failure {
    pub stage: Stage,
    pub kind: Kind,
    source: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} failed", self.stage)
    }
}

impl std::error::Error for Failure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(self.source.as_ref())
    }
}

pub fn usage(stage: Stage, err: impl Into<anyhow::Error>) -> anyhow::Error {
    Failure {
        stage,
        kind: Kind::Usage,
        source: err.into(),
    }
    .into()
}

/// Wraps `err` for `stage`, classifying it by the core error it carries.
/// Anything unrecognized counts as a data error.
pub fn at(stage: Stage, err: impl Into<anyhow::Error>) -> anyhow::Error {
    let source = err.into();
    let kind = source
        .chain()
        .find_map(|e| e.downcast_ref::<CoreError>())
        .map_or(Kind::Data, classify);
    Failure {
        stage,
        kind,
        source,
    }
    .into()
}

fn classify(err: &CoreError) -> Kind {
    match err {
        CoreError::InvalidParameter(_) => Kind::Usage,
        CoreError::Parse { .. }
        | CoreError::DuplicateKey(_)
        | CoreError::Dimension { .. }
        | CoreError::OrphanVector(_)
        | CoreError::Format(_)
        | CoreError::DegenerateVector(_)
        | CoreError::MissingRepresentation(_)
        | CoreError::InsufficientPopulation { .. }
        | CoreError::InsufficientPool { .. }
        | CoreError::Io(_) => Kind::Data,
        CoreError::InsufficientData { .. }
        | CoreError::EmptyIndex
        | CoreError::UnderfullGraph { .. }
        | CoreError::InsufficientGroundTruth { .. }
        | CoreError::Range(_) => Kind::Compute,
    }
}

pub trait StageExt<T> {
    fn stage(self, stage: Stage) -> anyhow::Result<T>;
}

impl<T, E: Into<anyhow::Error>> StageExt<T> for Result<T, E> {
    fn stage(self, stage: Stage) -> anyhow::Result<T> {
        self.map_err(|e| at(stage, e))
    }
}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Failure>().map(|f| f.kind) {
        Some(Kind::Usage) => EXIT_USAGE,
        Some(Kind::Compute) => EXIT_COMPUTE,
        Some(Kind::Data) | None => EXIT_DATA,
    }
}
