use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use impact_subtype::clustering::{robust_labels, StandardScaler};
use impact_subtype::dataset::{cache_key, dataset_hash, extract_table, FeatureTable};
use impact_subtype::evaluation::{default_holdouts, lodo_report, mixed_test, rank_critical_features, CriticalRanking, EvaluationReport, Task};
use impact_subtype::features::{FeatureExtractor, FeatureSchema};
use impact_subtype::regression::pipeline::route_counts;
use impact_subtype::regression::{train_pipeline, SubtypePipeline};
use impact_subtype::signal::load_dataset;
use impact_subtype::synth::{generate, write_dataset};
use impact_subtype::Execution;
use log::info;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::meta::{sha256_file, RunMeta};

/// Overrides the feature cache location.
pub const CACHE_ENV: &str = "IMPACTSUB_CACHE_DIR";

pub fn cache_dir() -> PathBuf {
    std::env::var_os(CACHE_ENV).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("impactsub-cache"))
}

pub struct LoadedFeatures {
    pub table: FeatureTable,
    pub dataset_hash: String,
    pub cache_hit: bool,
}

/// Ingests the manifest and returns its feature table, from the cache when
/// the dataset content and extraction settings match.
pub fn load_features(cfg: &RunConfig) -> Result<LoadedFeatures, CliError> {
    let manifest = cfg.require_manifest()?;
    let recs = load_dataset(manifest)?;
    let hash = dataset_hash(&recs);
    let opts = cfg.extraction_options();
    let schema = FeatureSchema::v1();
    let key = cache_key(&hash, &opts, schema);
    let dir = cache_dir();
    let path = dir.join(format!("{key}.features"));
    match FeatureTable::read_cache(&path, &key) {
        Ok(Some(table)) => {
            info!("feature cache hit: {}", path.display());
            return Ok(LoadedFeatures { table, dataset_hash: hash, cache_hit: true });
        }
        Ok(None) => {}
        Err(e) => log::warn!("ignoring unreadable cache entry {}: {e}", path.display()),
    }
    info!("extracting features for {} impacts", recs.len());
    let table = extract_table(&recs, &FeatureExtractor::default(), &opts, Execution::Parallel)?;
    if let Err(e) = fs::create_dir_all(&dir).map_err(CliError::from).and_then(|_| {
        let tmp = dir.join(format!("{key}.features.{}.tmp", std::process::id()));
        table.write_cache(&tmp, &key)?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }) {
        log::warn!("could not write feature cache: {e}");
    }
    Ok(LoadedFeatures { table, dataset_hash: hash, cache_hit: false })
}

fn write_meta(command: &str, cfg: &RunConfig, hash: Option<String>, seeds: Vec<u64>, files: &[PathBuf]) -> Result<PathBuf, CliError> {
    let mut artifacts = BTreeMap::new();
    for f in files {
        let name = f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        artifacts.insert(name, sha256_file(f)?);
    }
    let meta = RunMeta::new(command, cfg.clone(), hash, seeds, artifacts);
    let path = cfg.out_dir.join("run_meta.json");
    fs::write(&path, meta.to_json())?;
    Ok(path)
}

pub struct ExtractOutcome {
    pub path: PathBuf,
    pub rows: usize,
    pub cols: usize,
    pub cache_hit: bool,
    pub sha256: String,
}

impl ExtractOutcome {
    pub fn summary(&self) -> String {
        format!(
            "{}\nwrote {} ({} rows x {} columns)\nsha256 {}",
            if self.cache_hit { "cache hit" } else { "cache miss" },
            self.path.display(),
            self.rows,
            self.cols,
            self.sha256
        )
    }
}

pub fn extract(cfg: &RunConfig, out: Option<&Path>) -> Result<ExtractOutcome, CliError> {
    let loaded = load_features(cfg)?;
    fs::create_dir_all(&cfg.out_dir)?;
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.out_dir.join("features.csv"));
    loaded.table.write_csv(&path, FeatureSchema::v1())?;
    let sha256 = sha256_file(&path)?;
    write_meta("extract", cfg, Some(loaded.dataset_hash), vec![], std::slice::from_ref(&path))?;
    Ok(ExtractOutcome { rows: loaded.table.len(), cols: 3 + loaded.table.x.cols(), path, cache_hit: loaded.cache_hit, sha256 })
}

pub struct ClusterOutcome {
    pub path: PathBuf,
    pub labels: Vec<usize>,
    pub sizes: Vec<usize>,
    pub mean_agreement: f64,
}

impl ClusterOutcome {
    pub fn summary(&self) -> String {
        let sizes: Vec<String> = self.sizes.iter().enumerate().map(|(k, n)| format!("cluster {}: {n}", k + 1)).collect();
        format!("{}\nmean run agreement {:.4}\nwrote {}", sizes.join("\n"), self.mean_agreement, self.path.display())
    }
}

/// Robust K-means labels on the configured subset of the full dataset.
pub fn cluster(cfg: &RunConfig) -> Result<ClusterOutcome, CliError> {
    let loaded = load_features(cfg)?;
    let table = &loaded.table;
    let subset = cfg.subset_indices()?;
    let schema = FeatureSchema::v1();
    let names: Vec<String> = subset.iter().map(|&i| schema.features[i].name.clone()).collect();
    let scaler = StandardScaler::fit(&table.x, &subset, &names)?;
    let robust = robust_labels(&scaler.transform(&table.x), &cfg.kmeans_config(), cfg.clustering.repeats)?;
    let mut csv = String::from("impact_id,source,cluster,agreement\n");
    for i in 0..table.len() {
        let _ = writeln!(csv, "{},{},{},{}", table.ids[i], table.sources[i], robust.labels[i], robust.agreement[i]);
    }
    fs::create_dir_all(&cfg.out_dir)?;
    let path = cfg.out_dir.join("clusters.csv");
    fs::write(&path, csv)?;
    let seeds = (0..cfg.clustering.repeats as u64).map(|r| cfg.seed.wrapping_add(r)).collect();
    write_meta("cluster", cfg, Some(loaded.dataset_hash), seeds, std::slice::from_ref(&path))?;
    let zero_based: Vec<usize> = robust.labels.iter().map(|l| l - 1).collect();
    Ok(ClusterOutcome {
        sizes: route_counts(&zero_based, cfg.clustering.k),
        mean_agreement: robust.agreement.iter().sum::<f64>() / robust.agreement.len() as f64,
        labels: robust.labels,
        path,
    })
}

pub struct TrainOutcome {
    pub path: PathBuf,
    pub pipeline: SubtypePipeline,
}

impl TrainOutcome {
    pub fn summary(&self) -> String {
        let mut s = format!("method {}\n", self.pipeline.method);
        for r in &self.pipeline.routes {
            let _ = writeln!(s, "route {}: {} training impacts, lambda {}{}", r.name, r.n_train, r.model.lambda, if r.fallback { " (fallback)" } else { "" });
        }
        for w in &self.pipeline.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        let _ = write!(s, "wrote {}", self.path.display());
        s
    }
}

/// Trains the first configured method on the whole dataset.
pub fn train(cfg: &RunConfig) -> Result<TrainOutcome, CliError> {
    let spec = cfg.method_specs()?.remove(0);
    let loaded = load_features(cfg)?;
    let pipeline = train_pipeline(&loaded.table, &spec.method, &cfg.train_config()?)?;
    fs::create_dir_all(&cfg.out_dir)?;
    let path = cfg.out_dir.join("model.json");
    fs::write(&path, pipeline.to_json())?;
    write_meta("train", cfg, Some(loaded.dataset_hash), vec![cfg.seed], std::slice::from_ref(&path))?;
    Ok(TrainOutcome { path, pipeline })
}

pub struct RunOutcome {
    pub report: EvaluationReport,
    pub files: Vec<PathBuf>,
    pub cache_hit: bool,
}

impl RunOutcome {
    pub fn summary(&self) -> String {
        let r = &self.report;
        let mut s = match r.task {
            Task::MixedTest => format!("mean averaged R² over {} partitions\n{}", r.seeds.len(), r.metric_table(false)),
            Task::Lodo => format!("RMSE on the held-out source\n{}", r.metric_table(true)),
        };
        for c in &r.comparisons {
            let p = c.p.map_or("n/a".to_string(), |p| format!("{p:.3e}"));
            let _ = writeln!(s, "{} vs {}: p = {p}{}", c.a, c.b, if c.significant { " (significant)" } else { "" });
        }
        let _ = write!(s, "wrote {}", self.files.iter().map(|f| f.display().to_string()).collect::<Vec<_>>().join(", "));
        s
    }
}

/// Runs the configured evaluation task and emits the report files.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let methods = cfg.method_specs()?;
    let ec = cfg.eval_config()?;
    let loaded = load_features(cfg)?;
    let mut report = match cfg.task {
        Task::MixedTest => mixed_test(&loaded.table, &methods, &ec)?,
        Task::Lodo => {
            let mut holdouts = cfg.holdout_sources()?;
            if holdouts.is_empty() {
                holdouts = default_holdouts(&loaded.table, &ec);
            }
            lodo_report(&loaded.table, &holdouts, &methods, &ec)?
        }
    };
    report.dataset_hash = loaded.dataset_hash.clone();
    report.config = cfg.report_value();
    let mut files = report.emit(&cfg.out_dir)?;
    let meta = write_meta("run", cfg, Some(loaded.dataset_hash), report.seeds.clone(), &files)?;
    files.push(meta);
    Ok(RunOutcome { report, files, cache_hit: loaded.cache_hit })
}

pub struct CriticalOutcome {
    pub ranking: CriticalRanking,
    pub path: PathBuf,
}

impl CriticalOutcome {
    pub fn summary(&self) -> String {
        let mut s = String::from("top critical features\n");
        for (i, r) in self.ranking.rows.iter().take(3).enumerate() {
            let r2 = r.mean_r2.map_or("n/a".to_string(), |v| format!("{v:.4}"));
            let _ = writeln!(s, "{}. {} c = {} mean R² = {r2} purity = {}", i + 1, r.feature, r.c, r.purity);
        }
        if let Some(b) = self.ranking.baseline_mean_r2 {
            let _ = writeln!(s, "baseline mean R² = {b:.4}");
        }
        if self.ranking.no_improvement {
            s.push_str("warning: no candidate improves on the baseline\n");
        }
        let _ = write!(s, "wrote {}", self.path.display());
        s
    }
}

/// Ranks the 16 peak features as single-feature routers.
pub fn critical_points(cfg: &RunConfig) -> Result<CriticalOutcome, CliError> {
    let ec = cfg.eval_config()?;
    let loaded = load_features(cfg)?;
    let candidates = FeatureSchema::v1().temporal_base_indices();
    let ranking = rank_critical_features(&loaded.table, &candidates, &ec)?;
    fs::create_dir_all(&cfg.out_dir)?;
    let path = cfg.out_dir.join("critical_points.csv");
    fs::write(&path, ranking.to_csv())?;
    let seeds = (0..cfg.partitions as u64).map(|k| cfg.seed.wrapping_add(k)).collect();
    write_meta("critical-points", cfg, Some(loaded.dataset_hash), seeds, std::slice::from_ref(&path))?;
    Ok(CriticalOutcome { ranking, path })
}

pub struct SynthOutcome {
    pub manifest: PathBuf,
    pub impacts: usize,
    pub regime2: usize,
}

impl SynthOutcome {
    pub fn summary(&self) -> String {
        format!("generated {} impacts ({} in regime 2)\nwrote {}", self.impacts, self.regime2, self.manifest.display())
    }
}

/// Writes the synthetic benchmark into the output directory.
pub fn synth(cfg: &RunConfig) -> Result<SynthOutcome, CliError> {
    let ds = generate(&cfg.synth, Execution::Parallel)?;
    let manifest = write_dataset(&ds, &cfg.out_dir)?;
    let hash = dataset_hash(&ds.recordings());
    let files = [manifest.clone(), cfg.out_dir.join("truth.csv")];
    write_meta("synth", cfg, Some(hash), vec![cfg.synth.seed], &files)?;
    Ok(SynthOutcome { manifest, impacts: ds.impacts.len(), regime2: ds.impacts.iter().filter(|i| i.regime == 2).count() })
}
