use std::path::PathBuf;

use thiserror::Error;

use crate::model::{Granularity, Issue};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset has no originally failing test")]
    EmptyFailingSet,

    #[error("unknown formula `{0}`")]
    UnknownFormula(String),

    #[error("unknown granularity `{0}`")]
    UnknownGranularity(String),

    #[error("unknown matrix kind `{0}`")]
    UnknownMatrixKind(String),

    #[error("unknown stop criterion `{0}`")]
    UnknownStop(String),

    #[error("unknown report format `{0}`")]
    UnknownFormat(String),

    #[error("no remaining patch to pop")]
    EmptyPool,

    #[error("configuration asks for a {wanted:?} matrix but the dataset is {found:?}")]
    IncompatibleMatrix {
        wanted: crate::model::MatrixKind,
        found: crate::model::MatrixKind,
    },

    #[error("stop criterion `correct` needs correctness labels, but no patch carries one")]
    MissingCorrectnessLabels,

    #[error("warm-start history from `{source_tool}` has no element sets at {granularity} granularity")]
    GranularityMissing {
        source_tool: String,
        granularity: Granularity,
    },

    #[error("warm-start history `{source_tool}` is for bug `{found}`, expected `{expected}`")]
    HistoryBugMismatch {
        source_tool: String,
        expected: String,
        found: String,
    },

    #[error("line {line}: parse error: {reason}")]
    Parse { line: usize, reason: String },

    #[error("line {line}: schema error: {reason}")]
    Schema { line: usize, reason: String },

    #[error("dataset violates {} invariant(s): {}", .0.len(), join_issues(.0))]
    Invariant(Vec<Issue>),

    #[error("dataset is already a partial matrix")]
    AlreadyPartial,

    #[error("bad synthetic parameters: {0}")]
    BadParams(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors caused by the content of an input (as opposed to the
    /// environment). The CLI maps these to exit code 2.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn join_issues(issues: &[Issue]) -> String {
    issues
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
