//! Standardization, K-means subtypes, robust mode labels and single-feature
//! critical points.

pub mod critical;
pub mod kmeans;
pub mod logistic;
pub mod robust;
pub mod scaler;

use thiserror::Error;

pub use critical::{critical_point, fit_single_feature, purity, CriticalPoint, SingleFeatureFit};
pub use kmeans::{kmeans_assign, kmeans_fit, lloyd, Init, KMeansConfig, KMeansFit, KMeansModel};
pub use logistic::{fit_logistic, LogisticConfig, LogisticFit};
pub use robust::{robust_labels, RobustLabels};
pub use scaler::StandardScaler;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("feature `{0}` is constant on the training rows")]
    ConstantFeature(String),
    #[error("cluster count must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("repeat count must be at least 1")]
    InvalidRepeats,
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("fewer than {k} distinct rows")]
    DegenerateData { k: usize },
    #[error("expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("only one class present")]
    SingleClass,
    #[error("logistic fit did not converge (gradient norm {grad_norm:e})")]
    NoConvergence { grad_norm: f64 },
    #[error("logistic slope is zero; no critical point")]
    ZeroSlope,
}
