use std::path::PathBuf;

use thiserror::Error;

use crate::relational::CyclicVerdict;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("duplicate table name '{0}'")]
    DuplicateTable(String),
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("{0}")]
    Cyclic(CyclicVerdict),
    #[error("the join is empty")]
    EmptyJoin,
    #[error("total assignment cost is zero: every join point coincides with a center")]
    DegenerateDistribution,
    #[error("gave up sampling center {center} after {attempts} consecutive rejections")]
    RejectionBudgetExceeded { center: usize, attempts: usize },
    #[error("target count {target} exceeds join size {n}")]
    TargetExceedsN { target: u64, n: u64 },
    #[error("the requested ball contains no join point")]
    EmptyBall,
    #[error("k = {k} exceeds the {distinct} distinct weighted points")]
    InsufficientDistinctPoints { k: usize, distinct: usize },
    #[error("join has {rows} rows which exceeds the materialization guard of {guard}")]
    MaterializationGuard { rows: u64, guard: u64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
