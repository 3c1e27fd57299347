//! The fixed 367-element kinematic feature vector.

pub mod bic;
pub mod schema;
pub mod spectral;

use thiserror::Error;

pub use bic::{evaluate_bic, BicMetric, BicName, BicRegistry};
pub use schema::{FeatureDescriptor, FeatureGroup, FeatureSchema, Power, N_FEATURES, SCHEMA_VERSION};
pub use spectral::{periodogram, spectral_features, FrequencyWindows};

use crate::signal::{Channel, KinematicType, KinematicsSet};

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("empty signal")]
    EmptySignal,
    #[error("sampling is not uniform")]
    NonUniformSampling,
    #[error("frequency window [{lo_hz}, {hi_hz}) holds no periodogram bin")]
    EmptyWindow { lo_hz: f64, hi_hz: f64 },
    #[error("negative base feature {value} at index {index}")]
    NegativeBase { index: usize, value: f64 },
    #[error("unknown brain injury criterion `{0}`")]
    UnknownBic(String),
    #[error("unit error: {0}")]
    UnitError(String),
    #[error("non-finite feature `{0}`")]
    NonFiniteFeature(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub impact_id: String,
    pub values: Vec<f64>,
}

/// The 16 peak features in table order. Components use max |·|, resultants
/// the max of the magnitude.
pub fn temporal_peaks(kin: &KinematicsSet) -> Result<[f64; 16], FeatureError> {
    if kin.is_empty() {
        return Err(FeatureError::EmptySignal);
    }
    let mut out = [0.0; 16];
    for kind in KinematicType::ALL {
        let cs = kin.get(kind);
        for ch in Channel::ALL {
            let s = cs.channel(ch);
            if s.is_empty() {
                return Err(FeatureError::EmptySignal);
            }
            out[FeatureSchema::peak_index(kind, ch)] = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        }
    }
    Ok(out)
}

/// `[base, √base, base²]`, each block in base order.
pub fn power_expand(base: &[f64]) -> Result<Vec<f64>, FeatureError> {
    if let Some((index, &value)) = base.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(FeatureError::NegativeBase { index, value });
    }
    let mut out = Vec::with_capacity(base.len() * 3);
    out.extend_from_slice(base);
    out.extend(base.iter().map(|v| v.sqrt()));
    out.extend(base.iter().map(|v| v * v));
    Ok(out)
}

/// Feature extraction with a configurable injury-criterion registry.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    schema: &'static FeatureSchema,
    bic: BicRegistry,
}

impl Default for FeatureExtractor {
    fn default() -> Self {
        FeatureExtractor { schema: FeatureSchema::v1(), bic: BicRegistry::default() }
    }
}

impl FeatureExtractor {
    pub fn with_registry(bic: BicRegistry) -> Self {
        FeatureExtractor { schema: FeatureSchema::v1(), bic }
    }

    pub fn schema(&self) -> &'static FeatureSchema {
        self.schema
    }

    pub fn registry(&self) -> &BicRegistry {
        &self.bic
    }

    pub fn extract(&self, impact_id: &str, kin: &KinematicsSet) -> Result<FeatureVector, FeatureError> {
        let mut values = power_expand(&temporal_peaks(kin)?)?;
        values.extend(spectral_features(kin)?);
        values.extend(self.bic.evaluate_all(kin)?);
        if values.len() != self.schema.len() {
            return Err(FeatureError::SchemaMismatch(format!(
                "produced {} values for a {}-feature schema",
                values.len(),
                self.schema.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::NonFiniteFeature(self.schema.features[i].name.clone()));
        }
        Ok(FeatureVector { impact_id: impact_id.to_string(), values })
    }
}

/// Builds the canonical feature vector with the built-in criteria.
pub fn build_feature_vector(kin: &KinematicsSet, schema: &FeatureSchema) -> Result<FeatureVector, FeatureError> {
    if schema != FeatureSchema::v1() {
        return Err(FeatureError::SchemaMismatch(format!(
            "only schema {SCHEMA_VERSION} is supported, got {}",
            schema.schema_version
        )));
    }
    FeatureExtractor::default().extract("", kin)
}
