use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::regression::Method;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    MixedTest,
    Lodo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceMetrics {
    pub source: String,
    pub n: usize,
    /// Absent when the source's test targets have zero variance.
    pub r2: Option<f64>,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionResult {
    pub partition: usize,
    pub seed: u64,
    pub holdout: Option<String>,
    pub per_source: Vec<SourceMetrics>,
    pub avg_r2: Option<f64>,
    pub avg_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub label: String,
    pub method: Method,
    pub mean_avg_r2: Option<f64>,
    pub mean_avg_rmse: f64,
    pub partitions: Vec<PartitionResult>,
}

impl MethodResult {
    pub fn avg_r2_values(&self) -> Vec<Option<f64>> {
        self.partitions.iter().map(|p| p.avg_r2).collect()
    }

    /// Mean over partitions of one source's metric.
    pub fn source_mean(&self, source: &str, rmse: bool) -> Option<f64> {
        let v: Vec<f64> = self
            .partitions
            .iter()
            .filter_map(|p| p.per_source.iter().find(|m| m.source == source))
            .filter_map(|m| if rmse { Some(m.rmse) } else { m.r2 })
            .collect();
        if v.is_empty() {
            None
        } else {
            Some(v.iter().sum::<f64>() / v.len() as f64)
        }
    }
}

/// Paired Wilcoxon comparison of per-partition averaged R².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub n: usize,
    pub w: Option<f64>,
    /// Absent when fewer than five non-zero differences exist.
    pub p: Option<f64>,
    pub exact: bool,
    pub all_zero_differences: bool,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub task: Task,
    /// Test sources (mixed-test) or holdouts in row order (lodo).
    pub sources: Vec<String>,
    pub methods: Vec<MethodResult>,
    pub comparisons: Vec<Comparison>,
    pub alpha: f64,
    pub seeds: Vec<u64>,
    pub dataset_hash: String,
    pub config: serde_json::Value,
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

impl EvaluationReport {
    pub fn method(&self, label: &str) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.label == label)
    }

    pub fn comparison(&self, a: &str, b: &str) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| (c.a == a && c.b == b) || (c.a == b && c.b == a))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    fn header(&self, first: &str) -> String {
        let mut s = format!("| {first} |");
        for m in &self.methods {
            let _ = write!(s, " {} |", m.label);
        }
        s.push_str("\n|---|");
        for _ in &self.methods {
            s.push_str("---|");
        }
        s.push('\n');
        s
    }

    /// Mixed-test: rows are sources plus the average. Lodo: rows are holdouts.
    pub fn metric_table(&self, rmse: bool) -> String {
        let mut s = self.header(if self.task == Task::Lodo { "Holdout" } else { "Source" });
        for src in &self.sources {
            let _ = write!(s, "| {src} |");
            for m in &self.methods {
                let _ = write!(s, " {} |", cell(m.source_mean(src, rmse)));
            }
            s.push('\n');
        }
        if self.task == Task::MixedTest {
            s.push_str("| Average |");
            for m in &self.methods {
                let v = if rmse { Some(m.mean_avg_rmse) } else { m.mean_avg_r2 };
                let _ = write!(s, " {} |", cell(v));
            }
            s.push('\n');
        }
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        match self.task {
            Task::MixedTest => {
                let _ = writeln!(s, "# Mixed-test evaluation ({} partitions)\n", self.seeds.len());
                let _ = writeln!(s, "## Mean R²\n\n{}", self.metric_table(false));
                let _ = writeln!(s, "## Mean RMSE\n\n{}", self.metric_table(true));
                if !self.comparisons.is_empty() {
                    let _ = writeln!(s, "## Wilcoxon signed-rank on averaged R² (α = {})\n", self.alpha);
                    s.push_str("| A | B | n | W | p | significant |\n|---|---|---|---|---|---|\n");
                    for c in &self.comparisons {
                        let _ = writeln!(
                            s,
                            "| {} | {} | {} | {} | {} | {} |",
                            c.a,
                            c.b,
                            c.n,
                            c.w.map_or("n/a".into(), |w| format!("{w}")),
                            c.p.map_or("n/a".into(), |p| format!("{p:.4e}")),
                            if c.significant { "yes" } else { "no" }
                        );
                    }
                    s.push('\n');
                }
            }
            Task::Lodo => {
                s.push_str("# Leave-one-dataset-out evaluation\n\n");
                let _ = writeln!(s, "## RMSE on the held-out source\n\n{}", self.metric_table(true));
                let _ = writeln!(s, "## R² on the held-out source\n\n{}", self.metric_table(false));
            }
        }
        s
    }

    /// Long-format per-partition values for box plots.
    pub fn boxplot_csv(&self) -> String {
        let mut s = String::from("method,partition,seed,holdout,source,r2,rmse\n");
        let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for m in &self.methods {
            for p in &m.partitions {
                let h = p.holdout.clone().unwrap_or_default();
                for sm in &p.per_source {
                    let _ = writeln!(s, "{},{},{},{},{},{},{}", m.label, p.partition, p.seed, h, sm.source, num(sm.r2), sm.rmse);
                }
                let _ = writeln!(s, "{},{},{},{},average,{},{}", m.label, p.partition, p.seed, h, num(p.avg_r2), p.avg_rmse);
            }
        }
        s
    }

    /// Writes `report.json`, `report.md` and `boxplot_data.csv` into `dir`.
    pub fn emit(&self, dir: &Path) -> Result<Vec<PathBuf>, EvalError> {
        fs::create_dir_all(dir)?;
        let files = [
            ("report.json", self.to_json()),
            ("report.md", self.to_markdown()),
            ("boxplot_data.csv", self.boxplot_csv()),
        ];
        let mut out = Vec::new();
        for (name, body) in files {
            let p = dir.join(name);
            fs::write(&p, body)?;
            out.push(p);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(task: Task, sources: &[&str], methods: &[&str]) -> EvaluationReport {
        let methods = methods
            .iter()
            .enumerate()
            .map(|(k, l)| MethodResult {
                label: l.to_string(),
                method: Method::Baseline,
                mean_avg_r2: Some(0.5 + k as f64 / 10.0),
                mean_avg_rmse: 0.1,
                partitions: vec![PartitionResult {
                    partition: 0,
                    seed: 3,
                    holdout: None,
                    per_source: sources.iter().map(|s| SourceMetrics { source: s.to_string(), n: 4, r2: Some(0.1 + 1.0 / 3.0), rmse: 0.2 }).collect(),
                    avg_r2: Some(0.1 + 1.0 / 3.0),
                    avg_rmse: 0.2,
                }],
            })
            .collect();
        EvaluationReport {
            task,
            sources: sources.iter().map(|s| s.to_string()).collect(),
            methods,
            comparisons: vec![],
            alpha: 0.05,
            seeds: vec![3],
            dataset_hash: "h".into(),
            config: serde_json::json!({"k": 1}),
        }
    }

    fn table_shape(t: &str) -> (usize, usize) {
        let rows: Vec<&str> = t.lines().filter(|l| l.starts_with('|')).collect();
        let cols = rows[0].matches('|').count() - 2;
        (rows.len() - 2, cols)
    }

    #[test]
    fn mixed_table_shape() {
        let r = report(Task::MixedTest, &["CF", "HM", "MMA", "NASCAR"], &["Baseline", "KMeans"]);
        assert_eq!(table_shape(&r.metric_table(false)), (5, 2));
    }

    #[test]
    fn lodo_table_shape() {
        let r = report(Task::Lodo, &["CF", "MMA", "NASCAR"], &["Baseline", "Classification", "KMeans"]);
        assert_eq!(table_shape(&r.metric_table(true)), (3, 3));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let r = report(Task::MixedTest, &["HM"], &["Baseline"]);
        assert_eq!(EvaluationReport::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn emits_three_files() {
        let dir = tempfile::tempdir().unwrap();
        let r = report(Task::MixedTest, &["HM"], &["Baseline"]);
        let files = r.emit(dir.path()).unwrap();
        assert_eq!(files.len(), 3);
        assert!(fs::read_to_string(&files[2]).unwrap().lines().count() == 3);
    }
}
