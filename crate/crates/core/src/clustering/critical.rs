use serde::{Deserialize, Serialize};

use super::kmeans::KMeansConfig;
use super::logistic::{fit_logistic, LogisticConfig, LogisticFit};
use super::robust::robust_labels;
use super::scaler::StandardScaler;
use super::ClusterError;
use crate::matrix::Matrix;

/// A single-feature threshold partition. Invariant: `beta0 + beta1·c = 0` in
/// the units the coefficients were fitted in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub feature: String,
    /// Threshold in raw feature units.
    pub c: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub purity: f64,
}

impl CriticalPoint {
    /// Route 2 lies on the side the logistic model assigns to the second
    /// cluster; a value exactly at `c` goes to route 1.
    pub fn side(&self, x: f64) -> usize {
        side(self.c, self.beta1, x)
    }
}

pub(crate) fn side(c: f64, beta1: f64, x: f64) -> usize {
    if (beta1 > 0.0 && x > c) || (beta1 < 0.0 && x < c) {
        2
    } else {
        1
    }
}

/// `c = −β₀/β₁`, mapped to raw units through `(mean, std)` when the fit used
/// standardized values.
pub fn critical_point(beta0: f64, beta1: f64, scaler: Option<(f64, f64)>) -> Result<f64, ClusterError> {
    if beta1 == 0.0 || !beta1.is_finite() {
        return Err(ClusterError::ZeroSlope);
    }
    let c = -beta0 / beta1;
    Ok(match scaler {
        Some((mean, std)) => c * std + mean,
        None => c,
    })
}

/// Fraction of impacts whose threshold side equals their label.
pub fn purity(c: f64, beta1: f64, x: &[f64], labels: &[usize]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let hits = x.iter().zip(labels).filter(|(&v, &l)| side(c, beta1, v) == l).count();
    hits as f64 / x.len() as f64
}

/// One-feature clustering: standardize, robust K = 2 labels, logistic fit on
/// the labels, threshold back in raw units.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleFeatureFit {
    pub critical: CriticalPoint,
    pub labels: Vec<usize>,
    pub logistic: LogisticFit,
}

pub fn fit_single_feature(
    name: &str,
    x: &[f64],
    kmeans: &KMeansConfig,
    repeats: usize,
    logistic: &LogisticConfig,
) -> Result<SingleFeatureFit, ClusterError> {
    let raw = Matrix::from_column(x);
    let scaler = StandardScaler::fit(&raw, &[0], &[name.to_string()])?;
    let z = scaler.transform(&raw);
    let cfg = KMeansConfig { k: 2, ..*kmeans };
    let labels = robust_labels(&z, &cfg, repeats)?.labels;
    let y: Vec<bool> = labels.iter().map(|&l| l == 2).collect();
    let zs: Vec<f64> = z.column(0).collect();
    let fit = fit_logistic(&zs, &y, logistic)?;
    let c = critical_point(fit.beta0, fit.beta1, Some((scaler.means[0], scaler.stds[0])))?;
    let purity = purity(c, fit.beta1, x, &labels);
    Ok(SingleFeatureFit {
        critical: CriticalPoint { feature: name.to_string(), c, beta0: fit.beta0, beta1: fit.beta1, purity },
        labels,
        logistic: fit,
    })
}
