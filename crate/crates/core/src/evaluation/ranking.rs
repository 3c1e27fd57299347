use serde::{Deserialize, Serialize};

use super::tasks::{mixed_test, EvalConfig, MethodSpec};
use super::EvalError;
use crate::clustering::{fit_single_feature, KMeansConfig};
use crate::dataset::FeatureTable;
use crate::features::FeatureSchema;
use crate::regression::Method;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub feature: String,
    pub c: f64,
    pub beta0: f64,
    pub beta1: f64,
    /// Threshold purity against the feature's own robust labels.
    pub purity: f64,
    pub mean_r2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalRanking {
    /// Sorted by mean averaged R², best first.
    pub rows: Vec<RankedFeature>,
    pub baseline_mean_r2: Option<f64>,
    /// No candidate beats the baseline.
    pub no_improvement: bool,
}

impl CriticalRanking {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("feature,c,beta0,beta1,purity,mean_R2\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.feature,
                r.c,
                r.beta0,
                r.beta1,
                r.purity,
                r.mean_r2.map(|v| v.to_string()).unwrap_or_default()
            ));
        }
        s
    }
}

/// Runs the single-feature pipeline for every candidate over the configured
/// partitions (shared with a baseline run) and ranks by mean averaged R².
/// Thresholds are fitted on the full table.
pub fn rank_critical_features(table: &FeatureTable, candidates: &[usize], cfg: &EvalConfig) -> Result<CriticalRanking, EvalError> {
    let schema = FeatureSchema::v1();
    let mut methods = vec![MethodSpec::new("Baseline", Method::Baseline)];
    for &c in candidates {
        let name = schema.features.get(c).ok_or_else(|| EvalError::InvalidConfig(format!("feature index {c} out of range")))?.name.clone();
        methods.push(MethodSpec::new(name.clone(), Method::KmeansSingleFeature { feature: name }));
    }
    let report = mixed_test(table, &methods, cfg)?;
    let kcfg = KMeansConfig { seed: cfg.seed, execution: cfg.execution, ..cfg.train.kmeans };
    let mut rows = Vec::with_capacity(candidates.len());
    for (m, &c) in report.methods.iter().skip(1).zip(candidates) {
        let col: Vec<f64> = table.x.column(c).collect();
        let fit = fit_single_feature(&m.label, &col, &kcfg, cfg.train.repeats, &cfg.train.logistic)
            .map_err(|e| EvalError::Training { method: m.label.clone(), source: e.into() })?;
        let cp = fit.critical;
        rows.push(RankedFeature { feature: cp.feature, c: cp.c, beta0: cp.beta0, beta1: cp.beta1, purity: cp.purity, mean_r2: m.mean_avg_r2 });
    }
    // stable: equal scores keep schema order
    rows.sort_by(|a, b| match (a.mean_r2, b.mean_r2) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    let baseline_mean_r2 = report.methods[0].mean_avg_r2;
    let no_improvement = match baseline_mean_r2 {
        Some(b) => rows.iter().all(|r| r.mean_r2.is_none_or(|v| v <= b)),
        None => true,
    };
    if no_improvement {
        log::warn!("no candidate feature improves on the baseline mean R²");
    }
    Ok(CriticalRanking { rows, baseline_mean_r2, no_improvement })
}
