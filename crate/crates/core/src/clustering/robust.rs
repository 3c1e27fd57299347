use super::kmeans::{kmeans_fit, KMeansConfig, KMeansFit};
use super::ClusterError;
use crate::matrix::Matrix;
use crate::par;

/// Per-impact mode labels over repeated K-means fits.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustLabels {
    /// 1-based mode labels.
    pub labels: Vec<usize>,
    /// Fraction of runs agreeing with the mode, per impact.
    pub agreement: Vec<f64>,
    /// Centroids of the first run, the alignment reference.
    pub reference_centroids: Vec<Vec<f64>>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Maps each cluster of `run` onto a reference cluster, minimizing the total
/// centroid distance. Exhaustive for K ≤ 8, greedy beyond.
pub fn align_to_reference(reference: &[Vec<f64>], centroids: &[Vec<f64>]) -> Vec<usize> {
    let k = reference.len();
    if k <= 8 {
        let mut best: Option<(f64, Vec<usize>)> = None;
        for perm in permutations(k) {
            let cost: f64 = perm.iter().enumerate().map(|(j, &r)| sq_dist(&centroids[j], &reference[r])).sum();
            if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                best = Some((cost, perm));
            }
        }
        best.unwrap().1
    } else {
        let mut taken = vec![false; k];
        centroids
            .iter()
            .map(|c| {
                let r = (0..k)
                    .filter(|&r| !taken[r])
                    .min_by(|&a, &b| sq_dist(c, &reference[a]).total_cmp(&sq_dist(c, &reference[b])))
                    .unwrap();
                taken[r] = true;
                r
            })
            .collect()
    }
}

/// Runs `kmeans_fit` `repeats` times with seeds `seed + run`, aligns each
/// run's labels to the first run and takes the per-impact mode (ties toward
/// the lower label).
pub fn robust_labels(x: &Matrix, cfg: &KMeansConfig, repeats: usize) -> Result<RobustLabels, ClusterError> {
    if repeats == 0 {
        return Err(ClusterError::InvalidRepeats);
    }
    let inner = KMeansConfig { execution: crate::par::Execution::Sequential, ..*cfg };
    let fits: Vec<KMeansFit> = par::try_map(cfg.execution, &(0..repeats).collect::<Vec<_>>(), |&r| {
        kmeans_fit(x, &inner.with_seed(cfg.seed.wrapping_add(r as u64)))
    })?;
    let k = cfg.k;
    let reference = fits[0].model.centroids.clone();
    let mut votes = vec![vec![0usize; k]; x.rows()];
    for fit in &fits {
        let map = align_to_reference(&reference, &fit.model.centroids);
        for (v, &l) in votes.iter_mut().zip(&fit.labels) {
            v[map[l - 1]] += 1;
        }
    }
    let mut labels = Vec::with_capacity(x.rows());
    let mut agreement = Vec::with_capacity(x.rows());
    for v in votes {
        let (best, count) = v.iter().enumerate().fold((0, 0), |acc, (j, &c)| if c > acc.1 { (j, c) } else { acc });
        labels.push(best + 1);
        agreement.push(count as f64 / repeats as f64);
    }
    Ok(RobustLabels { labels, agreement, reference_centroids: reference })
}
