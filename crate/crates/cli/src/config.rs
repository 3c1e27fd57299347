//! Run configuration: one JSON document, every field optional.
//!
//! Resolution order is defaults, then the `--config` file, then command-line
//! flags. [`RunConfig::validate`] runs before any data is touched.

use std::path::{Path, PathBuf};

use impact_subtype::evaluation::{EvalConfig, MethodSpec, Task};
use impact_subtype::features::{FeatureSchema, SCHEMA_VERSION};
use impact_subtype::regression::{default_lambda_grid, CvConfig, Method, TrainConfig};
use impact_subtype::signal::Source;
use impact_subtype::synth::SynthConfig;
use impact_subtype::clustering::KMeansConfig;
use impact_subtype::Execution;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// `temporal-16` or a comma-separated list of schema feature names.
pub const TEMPORAL_16: &str = "temporal-16";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringSpec {
    pub subset: String,
    pub k: usize,
    pub repeats: usize,
    pub n_init: usize,
    pub max_iter: usize,
}

impl Default for ClusteringSpec {
    fn default() -> Self {
        ClusteringSpec { subset: TEMPORAL_16.into(), k: 2, repeats: 100, n_init: 10, max_iter: 300 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub sample_rate: f64,
    pub lowpass_hz: Option<f64>,
    pub schema_version: String,
    pub clustering: ClusteringSpec,
    /// Features behind the `kmeans-1`, `kmeans-2`, … method tokens.
    pub critical_features: Vec<String>,
    pub methods: Vec<String>,
    pub task: Task,
    pub partitions: usize,
    pub train_frac: f64,
    /// Leave-one-dataset-out holdouts; empty means every non-anchor source.
    pub holdouts: Vec<String>,
    pub anchor: Option<String>,
    pub lambda_grid: Vec<f64>,
    pub cv_folds: usize,
    pub min_route_size: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            manifest: None,
            sample_rate: impact_subtype::signal::DEFAULT_SAMPLE_RATE,
            lowpass_hz: None,
            schema_version: SCHEMA_VERSION.into(),
            clustering: ClusteringSpec::default(),
            critical_features: vec!["ang_acc_res_peak".into(), "ang_acc_z_peak".into(), "lin_acc_y_peak".into()],
            methods: vec!["baseline".into(), "kmeans".into()],
            task: Task::MixedTest,
            partitions: 20,
            train_frac: 0.8,
            holdouts: Vec::new(),
            anchor: Some("HM".into()),
            lambda_grid: default_lambda_grid(),
            cv_folds: 5,
            min_route_size: 10,
            seed: 0,
            out_dir: PathBuf::from("out"),
            synth: SynthConfig::default(),
        }
    }
}

/// Command-line values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub manifest: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub methods: Option<Vec<String>>,
    pub task: Option<Task>,
    pub partitions: Option<usize>,
    pub holdouts: Option<Vec<String>>,
    pub subset: Option<String>,
    pub k: Option<usize>,
    pub repeats: Option<usize>,
    pub sample_rate: Option<f64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Defaults, then `file`, then `over`.
    pub fn resolve(file: Option<&Path>, over: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match file {
            Some(p) => Self::load(p)?,
            None => RunConfig::default(),
        };
        cfg.apply(over);
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.manifest {
            self.manifest = Some(v.clone());
        }
        if let Some(v) = &o.out_dir {
            self.out_dir = v.clone();
        }
        if let Some(v) = o.seed {
            self.seed = v;
            self.synth.seed = v;
        }
        if let Some(v) = &o.methods {
            self.methods = v.clone();
        }
        if let Some(v) = o.task {
            self.task = v;
        }
        if let Some(v) = o.partitions {
            self.partitions = v;
        }
        if let Some(v) = &o.holdouts {
            self.holdouts = v.clone();
        }
        if let Some(v) = &o.subset {
            self.clustering.subset = v.clone();
        }
        if let Some(v) = o.k {
            self.clustering.k = v;
        }
        if let Some(v) = o.repeats {
            self.clustering.repeats = v;
        }
        if let Some(v) = o.sample_rate {
            self.sample_rate = v;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("unsupported schema version `{}` (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return bad(format!("sample_rate must be positive, got {}", self.sample_rate));
        }
        if let Some(f) = self.lowpass_hz {
            if !(f > 0.0 && f < self.sample_rate / 2.0) {
                return bad(format!("lowpass_hz {f} must lie in (0, sample_rate/2)"));
            }
        }
        if self.partitions < 1 {
            return bad("partitions must be at least 1".into());
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return bad(format!("train_frac {} outside (0, 1)", self.train_frac));
        }
        if self.clustering.k < 2 {
            return bad(format!("clustering.k must be at least 2, got {}", self.clustering.k));
        }
        if self.clustering.repeats < 1 || self.clustering.n_init < 1 || self.clustering.max_iter < 1 {
            return bad("clustering repeats, n_init and max_iter must be at least 1".into());
        }
        if self.cv_folds < 2 {
            return bad(format!("cv_folds must be at least 2, got {}", self.cv_folds));
        }
        if self.lambda_grid.is_empty() || self.lambda_grid.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return bad("lambda_grid must be a non-empty list of positive numbers".into());
        }
        for f in &self.critical_features {
            feature_index(f)?;
        }
        self.subset_indices()?;
        self.method_specs()?;
        self.holdout_sources()?;
        self.anchor_source()?;
        self.synth.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn require_manifest(&self) -> Result<&Path, CliError> {
        self.manifest.as_deref().ok_or_else(|| CliError::Config("no dataset manifest given (--manifest or `manifest` in the config)".into()))
    }

    pub fn subset_indices(&self) -> Result<Vec<usize>, CliError> {
        if self.clustering.subset == TEMPORAL_16 {
            return Ok(FeatureSchema::v1().temporal_base_indices());
        }
        self.clustering.subset.split(',').map(|s| feature_index(s.trim())).collect()
    }

    pub fn method_specs(&self) -> Result<Vec<MethodSpec>, CliError> {
        if self.methods.is_empty() {
            return Err(CliError::Config("no methods configured".into()));
        }
        let specs: Vec<MethodSpec> = self.methods.iter().map(|m| parse_method(m, &self.critical_features)).collect::<Result<_, _>>()?;
        for (i, a) in specs.iter().enumerate() {
            if specs[..i].iter().any(|b| b.label == a.label) {
                return Err(CliError::Config(format!("method `{}` listed twice", a.label)));
            }
        }
        Ok(specs)
    }

    pub fn holdout_sources(&self) -> Result<Vec<Source>, CliError> {
        self.holdouts.iter().map(|h| parse_source(h)).collect()
    }

    pub fn anchor_source(&self) -> Result<Option<Source>, CliError> {
        self.anchor.as_deref().map(parse_source).transpose()
    }

    pub fn kmeans_config(&self) -> KMeansConfig {
        KMeansConfig {
            k: self.clustering.k,
            n_init: self.clustering.n_init,
            max_iter: self.clustering.max_iter,
            seed: self.seed,
            ..KMeansConfig::default()
        }
    }

    pub fn train_config(&self) -> Result<TrainConfig, CliError> {
        Ok(TrainConfig {
            lambda_grid: self.lambda_grid.clone(),
            cv: CvConfig { folds: self.cv_folds, seed: self.seed },
            min_route_size: self.min_route_size,
            kmeans: self.kmeans_config(),
            kmeans_subset: self.subset_indices()?,
            repeats: self.clustering.repeats,
            execution: Execution::Parallel,
            ..TrainConfig::default()
        }
        .with_seed(self.seed))
    }

    pub fn eval_config(&self) -> Result<EvalConfig, CliError> {
        Ok(EvalConfig {
            partitions: self.partitions,
            train_frac: self.train_frac,
            seed: self.seed,
            train: self.train_config()?,
            anchor: self.anchor_source()?,
            execution: Execution::Parallel,
        })
    }

    pub fn extraction_options(&self) -> impact_subtype::dataset::ExtractionOptions {
        impact_subtype::dataset::ExtractionOptions {
            sample_rate: self.sample_rate,
            kinematics: impact_subtype::signal::KinematicsOptions { lowpass_hz: self.lowpass_hz },
        }
    }

    /// The configuration as embedded in reports: output location removed so
    /// reruns into another directory produce identical reports.
    pub fn report_value(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(o) = v.as_object_mut() {
            o.remove("out_dir");
        }
        v
    }
}

pub fn feature_index(name: &str) -> Result<usize, CliError> {
    FeatureSchema::v1().index_of(name).ok_or_else(|| CliError::Config(format!("unknown feature `{name}`")))
}

pub fn parse_source(s: &str) -> Result<Source, CliError> {
    s.parse().map_err(|_| CliError::Config(format!("unknown source `{s}`")))
}

/// `baseline`, `classification`, `kmeans`, `kmeans-N` (N-th critical feature,
/// 1-based) or `kmeans-single-feature:NAME`.
pub fn parse_method(token: &str, critical: &[String]) -> Result<MethodSpec, CliError> {
    let t = token.trim().to_ascii_lowercase();
    let spec = match t.as_str() {
        "baseline" => MethodSpec::new("Baseline", Method::Baseline),
        "classification" => MethodSpec::new("Classification", Method::Classification),
        "kmeans" => MethodSpec::new("KMeans", Method::Kmeans),
        _ => {
            if let Some(n) = t.strip_prefix("kmeans-").and_then(|n| n.parse::<usize>().ok()) {
                let feature = n
                    .checked_sub(1)
                    .and_then(|i| critical.get(i))
                    .ok_or_else(|| CliError::Config(format!("method `{token}` needs at least {n} critical features, {} configured", critical.len())))?;
                feature_index(feature)?;
                MethodSpec::new(format!("KMeans-{n}"), Method::KmeansSingleFeature { feature: feature.clone() })
            } else if let Some(name) = token.trim().strip_prefix("kmeans-single-feature:") {
                feature_index(name)?;
                MethodSpec::new(format!("KMeans[{name}]"), Method::KmeansSingleFeature { feature: name.to_string() })
            } else {
                return Err(CliError::Config(format!("unknown method `{token}`")));
            }
        }
    };
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"partitions": 7, "seed": 3, "clustering": {"repeats": 5}}"#).unwrap();
        let cfg = RunConfig::resolve(Some(&p), &Overrides { seed: Some(9), ..Overrides::default() }).unwrap();
        assert_eq!(cfg.partitions, 7);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.clustering.repeats, 5);
        assert_eq!(cfg.clustering.k, 2);
    }

    #[test]
    fn rejects_bad_values_before_compute() {
        let bad = [
            r#"{"partitions": 0}"#,
            r#"{"critical_features": ["nope"]}"#,
            r#"{"methods": ["kmeans-4"]}"#,
            r#"{"methods": ["forest"]}"#,
            r#"{"clustering": {"subset": "lin_acc_x_peak,bogus"}}"#,
            r#"{"train_frac": 1.0}"#,
            r#"{"lambda_grid": []}"#,
        ];
        for b in bad {
            let cfg = RunConfig::from_json(b).unwrap();
            assert!(matches!(cfg.validate(), Err(CliError::Config(_))), "{b}");
        }
        assert!(RunConfig::from_json(r#"{"partitons": 3}"#).is_err());
    }

    #[test]
    fn method_tokens() {
        let cfg = RunConfig { methods: vec!["kmeans-1".into(), "kmeans-2".into(), "kmeans-3".into()], ..RunConfig::default() };
        let specs = cfg.method_specs().unwrap();
        assert_eq!(specs.iter().map(|s| s.label.as_str()).collect::<Vec<_>>(), ["KMeans-1", "KMeans-2", "KMeans-3"]);
        assert_eq!(specs[1].method, Method::KmeansSingleFeature { feature: "ang_acc_z_peak".into() });
    }
}
