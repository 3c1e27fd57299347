//! Ridge strain regression, the MLP source classifier and the
//! cluster-then-regress pipeline.

pub mod mlp;
pub mod pipeline;
pub mod ridge;

use thiserror::Error;

use crate::clustering::ClusterError;

pub use mlp::{mlp_fit, MlpClassifier, MlpConfig};
pub use pipeline::{train_pipeline, Method, Router, SubtypePipeline, TrainConfig};
pub use ridge::{default_lambda_grid, ridge_fit, ridge_fit_tuned, tune_lambda, CvConfig, RidgeModel, RidgePath};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegressionError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("normal equations are singular at λ = 0")]
    SingularSystem,
    #[error("invalid ridge penalty {0}")]
    InvalidLambda(f64),
    #[error("λ grid is empty")]
    EmptyGrid,
    #[error("classifier needs at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("route {route} received {got} training rows, fewer than {needed}")]
    EmptyCluster { route: String, got: usize, needed: usize },
    #[error("training impact `{0}` has no csdm label")]
    Unlabeled(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("{0}")]
    Cluster(#[from] ClusterError),
}
