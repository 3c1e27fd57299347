//! Head impact subtyping: kinematic features, K-means subtypes and
//! subtype-specific ridge regression of brain strain.

pub mod clustering;
pub mod dataset;
pub mod evaluation;
pub mod features;
pub mod matrix;
pub mod par;
pub mod regression;
pub mod signal;
pub mod synth;

pub use matrix::Matrix;
pub use par::Execution;
