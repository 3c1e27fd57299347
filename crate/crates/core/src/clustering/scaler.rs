use serde::{Deserialize, Serialize};

use super::ClusterError;
use crate::matrix::Matrix;

/// Per-feature standardization with training-set statistics (population std).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardScaler {
    /// Column indices into the full feature matrix this scaler reads.
    pub subset: Vec<usize>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

fn column_stats(x: &Matrix, col: usize) -> (f64, f64) {
    let n = x.rows() as f64;
    let mean = x.column(col).sum::<f64>() / n;
    let var = x.column(col).map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn is_constant(mean: f64, std: f64) -> bool {
    std == 0.0 || std <= 1e-12 * mean.abs()
}

impl StandardScaler {
    /// Fits on the rows of `x`; rejects constant columns.
    pub fn fit(x: &Matrix, subset: &[usize], names: &[String]) -> Result<Self, ClusterError> {
        if x.rows() < 2 {
            return Err(ClusterError::TooFewSamples { needed: 2, got: x.rows() });
        }
        let mut means = Vec::with_capacity(subset.len());
        let mut stds = Vec::with_capacity(subset.len());
        for (k, &c) in subset.iter().enumerate() {
            let (m, s) = column_stats(x, c);
            if is_constant(m, s) {
                let name = names.get(k).cloned().unwrap_or_else(|| format!("column {c}"));
                return Err(ClusterError::ConstantFeature(name));
            }
            means.push(m);
            stds.push(s);
        }
        Ok(StandardScaler { subset: subset.to_vec(), means, stds })
    }

    /// Fits without rejecting constant columns; those get std = 1 so their
    /// standardized value is identically zero on the training rows.
    pub fn fit_lenient(x: &Matrix, subset: &[usize]) -> Self {
        let mut means = Vec::with_capacity(subset.len());
        let mut stds = Vec::with_capacity(subset.len());
        for &c in subset {
            let (m, s) = column_stats(x, c);
            means.push(m);
            stds.push(if is_constant(m, s) { 1.0 } else { s });
        }
        StandardScaler { subset: subset.to_vec(), means, stds }
    }

    pub fn dim(&self) -> usize {
        self.subset.len()
    }

    /// Standardizes the subset columns of `x` into a new `rows × dim` matrix.
    pub fn transform(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), self.dim());
        for r in 0..x.rows() {
            let row = x.row(r);
            let dst = out.row_mut(r);
            for (k, &c) in self.subset.iter().enumerate() {
                dst[k] = (row[c] - self.means[k]) / self.stds[k];
            }
        }
        out
    }

    /// Standardizes one full-width row.
    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        self.subset.iter().enumerate().map(|(k, &c)| (row[c] - self.means[k]) / self.stds[k]).collect()
    }

    pub fn inverse_value(&self, k: usize, z: f64) -> f64 {
        z * self.stds[k] + self.means[k]
    }

    /// Maps a standardized `rows × dim` matrix back to raw units.
    pub fn inverse_transform(&self, z: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(z.rows(), self.dim());
        for r in 0..z.rows() {
            for k in 0..self.dim() {
                out.row_mut(r)[k] = self.inverse_value(k, z.row(r)[k]);
            }
        }
        out
    }
}
