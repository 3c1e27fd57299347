//! Lloyd's K-means with random restarts.
//!
//! Labels exposed by this module are 1-based (`1..=K`). After fitting, clusters
//! are renumbered so that centroids are sorted by their first coordinate
//! (cluster 1 has the smallest centroid on the first subset feature).
//! Single-column two-cluster fits also try the exact best sorted split, so
//! they always reach the global optimum.

use std::cmp::Ordering;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ClusterError;
use crate::matrix::Matrix;
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    /// Distinct data points drawn uniformly at random.
    #[default]
    RandomPoints,
    PlusPlus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub n_init: usize,
    pub max_iter: usize,
    pub seed: u64,
    #[serde(default)]
    pub init: Init,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig { k: 2, n_init: 10, max_iter: 300, seed: 0, init: Init::RandomPoints, execution: Execution::Parallel }
    }
}

impl KMeansConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        KMeansConfig { seed, ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    pub k: usize,
    /// Canonically ordered centroids in standardized space.
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    pub n_iter: usize,
    /// Columns of the full feature matrix the model was fit on.
    pub feature_subset: Vec<usize>,
    pub seed: u64,
}

/// Outcome of one Lloyd run from a fixed initialization.
#[derive(Debug, Clone)]
pub struct LloydRun {
    pub centroids: Vec<Vec<f64>>,
    /// 0-based labels.
    pub labels: Vec<usize>,
    pub inertia: f64,
    pub n_iter: usize,
    /// Objective after every assignment and every update half-step.
    pub trace: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid, ties to the lowest index.
fn nearest(row: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(row, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn objective(x: &Matrix, labels: &[usize], centroids: &[Vec<f64>]) -> f64 {
    x.iter_rows().zip(labels).map(|(r, &l)| sq_dist(r, &centroids[l])).sum()
}

/// Runs Lloyd iterations until assignments stop changing or `max_iter`
/// updates have been made. Empty clusters keep their previous centroid.
pub fn lloyd(x: &Matrix, init: Vec<Vec<f64>>, max_iter: usize) -> LloydRun {
    let k = init.len();
    let d = x.cols();
    let mut centroids = init;
    let mut labels: Vec<usize> = x.iter_rows().map(|r| nearest(r, &centroids).0).collect();
    let mut trace = vec![objective(x, &labels, &centroids)];
    let mut n_iter = 0;
    while n_iter < max_iter {
        n_iter += 1;
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (r, &l) in x.iter_rows().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(r) {
                *s += v;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                centroids[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            }
        }
        let after_update = objective(x, &labels, &centroids);
        debug_assert!(after_update <= trace.last().unwrap() * (1.0 + 1e-12) + 1e-12);
        trace.push(after_update);

        let new_labels: Vec<usize> = x.iter_rows().map(|r| nearest(r, &centroids).0).collect();
        let changed = new_labels != labels;
        labels = new_labels;
        let after_assign = objective(x, &labels, &centroids);
        debug_assert!(after_assign <= after_update * (1.0 + 1e-12) + 1e-12);
        trace.push(after_assign);
        if !changed {
            break;
        }
    }
    let inertia = *trace.last().unwrap();
    LloydRun { centroids, labels, inertia, n_iter, trace }
}

fn compare_rows(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

fn distinct_rows(x: &Matrix) -> usize {
    let mut rows: Vec<&[f64]> = x.iter_rows().collect();
    rows.sort_by(|a, b| compare_rows(a, b));
    rows.dedup_by(|a, b| compare_rows(a, b).is_eq());
    rows.len()
}

fn random_points_init(x: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    loop {
        let idx = sample(rng, x.rows(), k);
        let mut picked: Vec<Vec<f64>> = idx.iter().map(|i| x.row(i).to_vec()).collect();
        picked.sort_by(|a, b| compare_rows(a, b));
        if picked.windows(2).all(|w| compare_rows(&w[0], &w[1]).is_ne()) {
            return idx.iter().map(|i| x.row(i).to_vec()).collect();
        }
    }
}

fn plus_plus_init(x: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = x.rows();
    let mut centroids = vec![x.row(rng.random_range(0..n)).to_vec()];
    let mut d2: Vec<f64> = x.iter_rows().map(|r| sq_dist(r, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (i, &w) in d2.iter().enumerate() {
            if w > 0.0 && target < w {
                pick = i;
                break;
            }
            target -= w;
        }
        if d2[pick] == 0.0 {
            pick = d2.iter().position(|&w| w > 0.0).unwrap_or(pick);
        }
        let c = x.row(pick).to_vec();
        for (di, r) in d2.iter_mut().zip(x.iter_rows()) {
            *di = di.min(sq_dist(r, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Sorts centroids lexicographically and relabels (1-based). Exact ties are
/// re-resolved toward the lower canonical label.
fn canonicalize(x: &Matrix, run: LloydRun) -> (Vec<Vec<f64>>, Vec<usize>, f64, usize) {
    let mut order: Vec<usize> = (0..run.centroids.len()).collect();
    order.sort_by(|&a, &b| compare_rows(&run.centroids[a], &run.centroids[b]));
    let centroids: Vec<Vec<f64>> = order.iter().map(|&o| run.centroids[o].clone()).collect();
    let labels = x.iter_rows().map(|r| nearest(r, &centroids).0 + 1).collect();
    (centroids, labels, run.inertia, run.n_iter)
}

/// Fitted model together with the 1-based training labels.
#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub model: KMeansModel,
    pub labels: Vec<usize>,
}

/// Fits K-means on an already standardized matrix, keeping the restart with
/// the smallest inertia (ties to the earliest restart).
pub fn kmeans_fit(x: &Matrix, cfg: &KMeansConfig) -> Result<KMeansFit, ClusterError> {
    if cfg.k < 2 {
        return Err(ClusterError::InvalidK(cfg.k));
    }
    if x.rows() < cfg.k {
        return Err(ClusterError::TooFewSamples { needed: cfg.k, got: x.rows() });
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(ClusterError::NonFinite);
    }
    if distinct_rows(x) < cfg.k {
        return Err(ClusterError::DegenerateData { k: cfg.k });
    }
    let n_init = cfg.n_init.max(1);
    let runs = par::map_range(cfg.execution, n_init, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(r as u64);
        let init = match cfg.init {
            Init::RandomPoints => random_points_init(x, cfg.k, &mut rng),
            Init::PlusPlus => plus_plus_init(x, cfg.k, &mut rng),
        };
        lloyd(x, init, cfg.max_iter)
    });
    let mut best = runs
        .into_iter()
        .reduce(|best, r| if r.inertia < best.inertia { r } else { best })
        .expect("at least one restart");
    if x.cols() == 1 && cfg.k == 2 {
        let exact = lloyd(x, exact_two_split_1d(x), cfg.max_iter);
        if exact.inertia < best.inertia {
            best = exact;
        }
    }
    let (centroids, labels, inertia, n_iter) = canonicalize(x, best);
    Ok(KMeansFit {
        model: KMeansModel {
            k: cfg.k,
            centroids,
            inertia,
            n_iter,
            feature_subset: (0..x.cols()).collect(),
            seed: cfg.seed,
        },
        labels,
    })
}

/// Centroids of the globally optimal two-cluster partition of a single
/// column: the best contiguous split of the sorted values.
fn exact_two_split_1d(x: &Matrix) -> Vec<Vec<f64>> {
    let mut v: Vec<f64> = x.column(0).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let mut prefix = vec![(0.0, 0.0); n + 1];
    for (i, &a) in v.iter().enumerate() {
        prefix[i + 1] = (prefix[i].0 + a, prefix[i].1 + a * a);
    }
    let sse = |lo: usize, hi: usize| {
        let (s, q) = (prefix[hi].0 - prefix[lo].0, prefix[hi].1 - prefix[lo].1);
        q - s * s / (hi - lo) as f64
    };
    let mut best = (f64::INFINITY, 1);
    for i in 1..n {
        if v[i] == v[i - 1] {
            continue;
        }
        let cost = sse(0, i) + sse(i, n);
        if cost < best.0 {
            best = (cost, i);
        }
    }
    let i = best.1;
    let mean = |lo: usize, hi: usize| (prefix[hi].0 - prefix[lo].0) / (hi - lo) as f64;
    vec![vec![mean(0, i)], vec![mean(i, n)]]
}

/// Nearest-centroid labels (1-based), ties to the lower label.
pub fn kmeans_assign(model: &KMeansModel, x: &Matrix) -> Result<Vec<usize>, ClusterError> {
    let d = model.centroids.first().map_or(0, Vec::len);
    if x.cols() != d {
        return Err(ClusterError::DimensionMismatch { expected: d, got: x.cols() });
    }
    Ok(x.iter_rows().map(|r| nearest(r, &model.centroids).0 + 1).collect())
}

pub fn assign_row(model: &KMeansModel, row: &[f64]) -> usize {
    nearest(row, &model.centroids).0 + 1
}

/// Inertia of a labeling under the model's centroids.
pub fn inertia(model: &KMeansModel, x: &Matrix, labels: &[usize]) -> f64 {
    x.iter_rows().zip(labels).map(|(r, &l)| sq_dist(r, &model.centroids[l - 1])).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> Matrix {
        Matrix::from_column(v)
    }

    #[test]
    fn separated_one_dimensional_clusters() {
        let x = col(&[0.0, 0.1, 0.2, 10.0, 10.1, 10.2]);
        let fit = kmeans_fit(&x, &KMeansConfig::default()).unwrap();
        assert!((fit.model.centroids[0][0] - 0.1).abs() < 1e-12);
        assert!((fit.model.centroids[1][0] - 10.1).abs() < 1e-12);
        assert!((fit.model.inertia - 0.04).abs() < 1e-12);
        assert_eq!(fit.labels, vec![1, 1, 1, 2, 2, 2]);
    }

    #[test]
    fn k_must_be_at_least_two() {
        let x = col(&[0.0, 1.0, 2.0]);
        let cfg = KMeansConfig { k: 1, ..Default::default() };
        assert_eq!(kmeans_fit(&x, &cfg).unwrap_err(), ClusterError::InvalidK(1));
    }

    #[test]
    fn two_points_two_clusters() {
        let x = Matrix::from_rows(&[vec![1.0, 5.0], vec![-1.0, 2.0]]);
        let fit = kmeans_fit(&x, &KMeansConfig::default()).unwrap();
        assert_eq!(fit.model.inertia, 0.0);
        assert_eq!(fit.labels, vec![2, 1]);
    }

    #[test]
    fn degenerate_inputs() {
        let x = col(&[3.0, 3.0, 3.0]);
        assert_eq!(kmeans_fit(&x, &KMeansConfig::default()).unwrap_err(), ClusterError::DegenerateData { k: 2 });
        let x = col(&[1.0]);
        assert!(matches!(kmeans_fit(&x, &KMeansConfig::default()), Err(ClusterError::TooFewSamples { .. })));
    }

    #[test]
    fn assignment_rules() {
        let x = col(&[0.0, 0.1, 0.2, 10.0, 10.1, 10.2]);
        let fit = kmeans_fit(&x, &KMeansConfig::default()).unwrap();
        assert_eq!(kmeans_assign(&fit.model, &x).unwrap(), fit.labels);
        assert_eq!(kmeans_assign(&fit.model, &col(&[10.1])).unwrap(), vec![2]);
        // exactly representable centroids 1 and 11; 6 is equidistant
        let fit = kmeans_fit(&col(&[0.0, 1.0, 2.0, 10.0, 11.0, 12.0]), &KMeansConfig::default()).unwrap();
        assert_eq!(kmeans_assign(&fit.model, &col(&[6.0])).unwrap(), vec![1]);
        assert_eq!(kmeans_assign(&fit.model, &col(&[1.0, 11.0])).unwrap(), vec![1, 2]);
        let wide = Matrix::from_rows(&[vec![1.0, 2.0]]);
        assert!(matches!(kmeans_assign(&fit.model, &wide), Err(ClusterError::DimensionMismatch { .. })));
    }

    #[test]
    fn reported_inertia_matches_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<Vec<f64>> = (0..200).map(|_| (0..5).map(|_| rng.random::<f64>()).collect()).collect();
        let x = Matrix::from_rows(&rows);
        for init in [Init::RandomPoints, Init::PlusPlus] {
            let cfg = KMeansConfig { k: 3, init, ..Default::default() };
            let fit = kmeans_fit(&x, &cfg).unwrap();
            let direct = inertia(&fit.model, &x, &fit.labels);
            assert!((direct - fit.model.inertia).abs() < 1e-9);
            let firsts: Vec<f64> = fit.model.centroids.iter().map(|c| c[0]).collect();
            assert!(firsts.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn execution_policy_does_not_change_result() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let rows: Vec<Vec<f64>> = (0..150).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        let x = Matrix::from_rows(&rows);
        let seq = kmeans_fit(&x, &KMeansConfig { execution: Execution::Sequential, seed: 4, ..Default::default() }).unwrap();
        let par = kmeans_fit(&x, &KMeansConfig { execution: Execution::Parallel, seed: 4, ..Default::default() }).unwrap();
        assert_eq!(seq.model, par.model);
        assert_eq!(seq.labels, par.labels);
    }
}
