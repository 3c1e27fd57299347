//! `run_meta.json`: everything needed to repeat a command.

use std::collections::BTreeMap;
use std::path::Path;

use impact_subtype::features::{FeatureSchema, SCHEMA_VERSION};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub schema_version: String,
    pub schema_fingerprint: String,
    pub config: RunConfig,
    pub dataset_hash: Option<String>,
    pub seeds: Vec<u64>,
    /// Output file name to SHA-256 of its content.
    pub artifacts: BTreeMap<String, String>,
}

impl RunMeta {
    pub fn new(command: &str, config: RunConfig, dataset_hash: Option<String>, seeds: Vec<u64>, artifacts: BTreeMap<String, String>) -> Self {
        RunMeta {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            schema_version: SCHEMA_VERSION.into(),
            schema_fingerprint: FeatureSchema::v1().fingerprint(),
            config,
            dataset_hash,
            seeds,
            artifacts,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("meta serializes")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let meta: RunMeta = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if meta.schema_fingerprint != FeatureSchema::v1().fingerprint() {
            return Err(CliError::Config(format!("{} was written with a different feature schema", path.display())));
        }
        Ok(meta)
    }
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
