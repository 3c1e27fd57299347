//! Accuracy metrics, paired tests, the two evaluation tasks and reports.

pub mod metrics;
pub mod ranking;
pub mod report;
pub mod tasks;
pub mod wilcoxon;

use thiserror::Error;

use crate::regression::RegressionError;

pub use metrics::{r2, rmse};
pub use ranking::{rank_critical_features, CriticalRanking, RankedFeature};
pub use report::{Comparison, EvaluationReport, MethodResult, PartitionResult, SourceMetrics, Task};
pub use tasks::{default_holdouts, leave_one_dataset_out, lodo_report, mixed_test, stratified_split, EvalConfig, MethodSpec};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("empty input")]
    Empty,
    #[error("targets have zero variance; R² is undefined")]
    ZeroVariance,
    #[error("need at least {needed} non-zero differences, got {got}")]
    TooFewPairs { got: usize, needed: usize },
    #[error("source {name} has {got} impacts; at least 2 are needed")]
    InsufficientSourceCount { name: String, got: usize },
    #[error("unknown source `{0}`")]
    UnknownSource(String),
    #[error("invalid holdout: {0}")]
    InvalidHoldout(String),
    #[error("need at least {needed} training sources, got {got}")]
    TooFewSources { got: usize, needed: usize },
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("method {method} failed: {source}")]
    Training { method: String, source: RegressionError },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for EvalError {
    fn from(e: std::io::Error) -> Self {
        EvalError::Io(e.to_string())
    }
}
