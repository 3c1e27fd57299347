//! Mixed-test (repeated stratified splits) and leave-one-dataset-out tasks.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{r2, rmse};
use super::report::{Comparison, EvaluationReport, MethodResult, PartitionResult, SourceMetrics, Task};
use super::wilcoxon::wilcoxon_signed_rank;
use super::EvalError;
use crate::dataset::FeatureTable;
use crate::par::{self, Execution};
use crate::regression::{train_pipeline, Method, TrainConfig};
use crate::signal::Source;

pub const SIGNIFICANCE: f64 = 0.05;

/// A method under evaluation with its display label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub label: String,
    pub method: Method,
}

impl MethodSpec {
    pub fn new(label: impl Into<String>, method: Method) -> Self {
        MethodSpec { label: label.into(), method }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub partitions: usize,
    pub train_frac: f64,
    pub seed: u64,
    pub train: TrainConfig,
    /// Source always kept in training for leave-one-dataset-out.
    pub anchor: Option<Source>,
    pub execution: Execution,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            partitions: 20,
            train_frac: 0.8,
            seed: 0,
            train: TrainConfig::default(),
            anchor: Some(Source::Hm),
            execution: Execution::Parallel,
        }
    }
}

/// Per-source shuffle; each source contributes `round(n·(1 − train_frac))`
/// test rows, at least one and never all of them.
pub fn stratified_split(sources: &[Source], train_frac: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut by_source: BTreeMap<&Source, Vec<usize>> = BTreeMap::new();
    for (i, s) in sources.iter().enumerate() {
        by_source.entry(s).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for idx in by_source.values_mut() {
        idx.shuffle(&mut rng);
        let n = idx.len();
        let n_test = ((n as f64 * (1.0 - train_frac)).round() as usize).clamp(1, n.saturating_sub(1).max(1));
        let n_test = if n < 2 { 0 } else { n_test };
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Per-source R² and RMSE; averages are over the sources present.
pub fn score(sources: &[Source], y: &[f64], yhat: &[f64]) -> Result<(Vec<SourceMetrics>, Option<f64>, f64), EvalError> {
    let mut by_source: BTreeMap<&Source, Vec<usize>> = BTreeMap::new();
    for (i, s) in sources.iter().enumerate() {
        by_source.entry(s).or_default().push(i);
    }
    let mut out = Vec::new();
    for (s, idx) in by_source {
        let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        let ps: Vec<f64> = idx.iter().map(|&i| yhat[i]).collect();
        let r = match r2(&ys, &ps) {
            Ok(v) => Some(v),
            Err(EvalError::ZeroVariance) => {
                log::warn!("source {s}: zero target variance, R² excluded from the average");
                None
            }
            Err(e) => return Err(e),
        };
        out.push(SourceMetrics { source: s.to_string(), n: idx.len(), r2: r, rmse: rmse(&ys, &ps)? });
    }
    let defined: Vec<f64> = out.iter().filter_map(|m| m.r2).collect();
    let avg_r2 = if defined.is_empty() { None } else { Some(defined.iter().sum::<f64>() / defined.len() as f64) };
    let avg_rmse = out.iter().map(|m| m.rmse).sum::<f64>() / out.len() as f64;
    Ok((out, avg_r2, avg_rmse))
}

fn evaluate_split(
    table: &FeatureTable,
    train_idx: &[usize],
    test_idx: &[usize],
    methods: &[MethodSpec],
    train_cfg: &TrainConfig,
) -> Result<Vec<(Vec<SourceMetrics>, Option<f64>, f64)>, EvalError> {
    let train = table.subset(train_idx);
    let test = table.subset(test_idx);
    let y = test.targets().map_err(|e| EvalError::Data(e.to_string()))?;
    methods
        .iter()
        .map(|m| {
            let pipe = train_pipeline(&train, &m.method, train_cfg)
                .map_err(|source| EvalError::Training { method: m.label.clone(), source })?;
            let yhat = pipe.predict(&test.x).map_err(|source| EvalError::Training { method: m.label.clone(), source })?;
            score(&test.sources, &y, &yhat)
        })
        .collect()
}

fn summarize(label: &str, method: &Method, partitions: Vec<PartitionResult>) -> MethodResult {
    let r2s: Vec<f64> = partitions.iter().filter_map(|p| p.avg_r2).collect();
    let mean_avg_r2 = if r2s.is_empty() { None } else { Some(r2s.iter().sum::<f64>() / r2s.len() as f64) };
    let mean_avg_rmse = partitions.iter().map(|p| p.avg_rmse).sum::<f64>() / partitions.len().max(1) as f64;
    MethodResult { label: label.to_string(), method: method.clone(), mean_avg_r2, mean_avg_rmse, partitions }
}

fn compare_all(methods: &[MethodResult]) -> Vec<Comparison> {
    let mut out = Vec::new();
    for i in 0..methods.len() {
        for j in i + 1..methods.len() {
            let (a, b) = (&methods[i], &methods[j]);
            let pairs: Vec<(f64, f64)> = a
                .partitions
                .iter()
                .zip(&b.partitions)
                .filter_map(|(p, q)| Some((p.avg_r2?, q.avg_r2?)))
                .collect();
            let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let cmp = match wilcoxon_signed_rank(&x, &y) {
                Ok(r) => Comparison {
                    a: a.label.clone(),
                    b: b.label.clone(),
                    n: r.n,
                    w: Some(r.w),
                    p: Some(r.p),
                    exact: r.exact,
                    all_zero_differences: r.all_zero,
                    significant: r.p < SIGNIFICANCE,
                },
                Err(_) => Comparison {
                    a: a.label.clone(),
                    b: b.label.clone(),
                    n: x.len(),
                    w: None,
                    p: None,
                    exact: false,
                    all_zero_differences: false,
                    significant: false,
                },
            };
            out.push(cmp);
        }
    }
    out
}

/// Repeated stratified splits; every method trains on the same split with the
/// same seeds, partition `k` using `seed + k`.
pub fn mixed_test(table: &FeatureTable, methods: &[MethodSpec], cfg: &EvalConfig) -> Result<EvaluationReport, EvalError> {
    if cfg.partitions == 0 {
        return Err(EvalError::InvalidConfig("partitions must be at least 1".into()));
    }
    if !(cfg.train_frac > 0.0 && cfg.train_frac < 1.0) {
        return Err(EvalError::InvalidConfig(format!("train_frac {} outside (0, 1)", cfg.train_frac)));
    }
    let sources = table.distinct_sources();
    for s in &sources {
        let got = table.sources.iter().filter(|x| *x == s).count();
        if got < 2 {
            return Err(EvalError::InsufficientSourceCount { name: s.to_string(), got });
        }
    }
    let seeds: Vec<u64> = (0..cfg.partitions as u64).map(|k| cfg.seed.wrapping_add(k)).collect();
    let per_partition = par::try_map(cfg.execution, &seeds, |&seed| {
        let (train, test) = stratified_split(&table.sources, cfg.train_frac, seed);
        evaluate_split(table, &train, &test, methods, &cfg.train.clone().with_seed(seed))
    })?;
    let results: Vec<MethodResult> = methods
        .iter()
        .enumerate()
        .map(|(m, spec)| {
            let parts = per_partition
                .iter()
                .zip(&seeds)
                .enumerate()
                .map(|(k, (scores, &seed))| {
                    let (per_source, avg_r2, avg_rmse) = scores[m].clone();
                    PartitionResult { partition: k, seed, holdout: None, per_source, avg_r2, avg_rmse }
                })
                .collect();
            summarize(&spec.label, &spec.method, parts)
        })
        .collect();
    let comparisons = compare_all(&results);
    let mut names: Vec<Source> = sources;
    names.sort();
    Ok(EvaluationReport {
        task: Task::MixedTest,
        sources: names.iter().map(|s| s.to_string()).collect(),
        methods: results,
        comparisons,
        alpha: SIGNIFICANCE,
        seeds,
        dataset_hash: String::new(),
        config: serde_json::to_value(cfg).expect("config serializes"),
    })
}

fn check_holdout(table: &FeatureTable, holdout: &Source, cfg: &EvalConfig) -> Result<(), EvalError> {
    let sources = table.distinct_sources();
    if !sources.contains(holdout) {
        return Err(EvalError::UnknownSource(holdout.to_string()));
    }
    if cfg.anchor.as_ref() == Some(holdout) {
        return Err(EvalError::InvalidHoldout(format!("{holdout} is the always-train anchor source")));
    }
    if sources.len() < 3 {
        return Err(EvalError::TooFewSources { got: sources.len() - 1, needed: 2 });
    }
    Ok(())
}

/// Trains on every source but `holdout` and scores the holdout.
pub fn leave_one_dataset_out(
    table: &FeatureTable,
    holdout: &Source,
    methods: &[MethodSpec],
    cfg: &EvalConfig,
) -> Result<Vec<PartitionResult>, EvalError> {
    check_holdout(table, holdout, cfg)?;
    let train: Vec<usize> = (0..table.len()).filter(|&i| &table.sources[i] != holdout).collect();
    let test: Vec<usize> = (0..table.len()).filter(|&i| &table.sources[i] == holdout).collect();
    let scores = evaluate_split(table, &train, &test, methods, &cfg.train.clone().with_seed(cfg.seed))?;
    Ok(scores
        .into_iter()
        .map(|(per_source, avg_r2, avg_rmse)| PartitionResult {
            partition: 0,
            seed: cfg.seed,
            holdout: Some(holdout.to_string()),
            per_source,
            avg_r2,
            avg_rmse,
        })
        .collect())
}

/// One row per holdout, in the order given.
pub fn lodo_report(
    table: &FeatureTable,
    holdouts: &[Source],
    methods: &[MethodSpec],
    cfg: &EvalConfig,
) -> Result<EvaluationReport, EvalError> {
    for h in holdouts {
        check_holdout(table, h, cfg)?;
    }
    let rows = par::try_map(cfg.execution, holdouts, |h| leave_one_dataset_out(table, h, methods, cfg))?;
    let results = methods
        .iter()
        .enumerate()
        .map(|(m, spec)| {
            let parts = rows
                .iter()
                .enumerate()
                .map(|(k, r)| PartitionResult { partition: k, ..r[m].clone() })
                .collect();
            summarize(&spec.label, &spec.method, parts)
        })
        .collect();
    Ok(EvaluationReport {
        task: Task::Lodo,
        sources: holdouts.iter().map(|s| s.to_string()).collect(),
        methods: results,
        comparisons: Vec::new(),
        alpha: SIGNIFICANCE,
        seeds: vec![cfg.seed],
        dataset_hash: String::new(),
        config: serde_json::to_value(cfg).expect("config serializes"),
    })
}

/// Holdouts for the default task: every source except the anchor.
pub fn default_holdouts(table: &FeatureTable, cfg: &EvalConfig) -> Vec<Source> {
    let mut s: Vec<Source> = table.distinct_sources().into_iter().filter(|s| Some(s) != cfg.anchor.as_ref()).collect();
    s.sort();
    s
}
