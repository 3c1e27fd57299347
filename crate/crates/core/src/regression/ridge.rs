//! Ridge regression on standardized features with an unpenalized intercept.
//!
//! One symmetric eigendecomposition of the centered Gram matrix serves every
//! λ: the dual `Z·Zᵀ` when `n ≤ p`, the primal `Zᵀ·Z` otherwise.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::RegressionError;
use crate::clustering::StandardScaler;
use crate::matrix::Matrix;
use crate::par::{self, Execution};

/// `n_points` log-spaced values over `[10^lo, 10^hi]`.
pub fn log_grid(lo: f64, hi: f64, n_points: usize) -> Vec<f64> {
    if n_points == 1 {
        return vec![10f64.powf(lo)];
    }
    (0..n_points).map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (n_points - 1) as f64)).collect()
}

pub fn default_lambda_grid() -> Vec<f64> {
    log_grid(-3.0, 4.0, 15)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    /// Mean of the training targets; the prediction at the training means.
    pub intercept: f64,
    /// Coefficients on standardized features.
    pub coefficients: Vec<f64>,
    pub lambda: f64,
    pub scaler: StandardScaler,
}

impl RidgeModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let z = self.scaler.transform_row(row);
        self.intercept + z.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.iter_rows().map(|r| self.predict_row(r)).collect()
    }

    /// Coefficients and intercept in raw feature units.
    pub fn raw_coefficients(&self) -> (f64, Vec<f64>) {
        let coef: Vec<f64> = self.coefficients.iter().zip(&self.scaler.stds).map(|(b, s)| b / s).collect();
        let shift: f64 = coef.iter().zip(&self.scaler.means).map(|(b, m)| b * m).sum();
        (self.intercept - shift, coef)
    }
}

/// Precomputed spectral factorization of one training set.
pub struct RidgePath {
    scaler: StandardScaler,
    y_mean: f64,
    z: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    /// Projection of the centered target onto the eigenbasis.
    proj: DVector<f64>,
    dual: bool,
}

fn check_inputs(x: &Matrix, y: &[f64]) -> Result<(), RegressionError> {
    if x.rows() != y.len() {
        return Err(RegressionError::DimensionMismatch { expected: x.rows(), got: y.len() });
    }
    if x.rows() < 2 {
        return Err(RegressionError::TooFewSamples { needed: 2, got: x.rows() });
    }
    if x.as_slice().iter().chain(y).any(|v| !v.is_finite()) {
        return Err(RegressionError::NonFinite);
    }
    Ok(())
}

impl RidgePath {
    pub fn new(x: &Matrix, y: &[f64]) -> Result<Self, RegressionError> {
        check_inputs(x, y)?;
        let (n, p) = (x.rows(), x.cols());
        let subset: Vec<usize> = (0..p).collect();
        let scaler = StandardScaler::fit_lenient(x, &subset);
        let zm = scaler.transform(x);
        let z = DMatrix::from_row_slice(n, p, zm.as_slice());
        let y_mean = y.iter().sum::<f64>() / n as f64;
        let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
        let dual = n <= p;
        let gram = if dual { &z * z.transpose() } else { z.transpose() * &z };
        let SymmetricEigen { eigenvalues, eigenvectors } = SymmetricEigen::new(gram);
        let proj = if dual { eigenvectors.transpose() * &yc } else { eigenvectors.transpose() * (z.transpose() * &yc) };
        Ok(RidgePath { scaler, y_mean, z, eigenvalues, eigenvectors, proj, dual })
    }

    fn is_singular(&self) -> bool {
        if self.dual {
            // centered data has rank ≤ n − 1 < p
            return true;
        }
        let max = self.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.eigenvalues.iter().any(|&s| s <= 1e-12 * max.max(f64::MIN_POSITIVE))
    }

    pub fn fit(&self, lambda: f64) -> Result<RidgeModel, RegressionError> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(RegressionError::InvalidLambda(lambda));
        }
        if lambda == 0.0 && self.is_singular() {
            return Err(RegressionError::SingularSystem);
        }
        let scaled = DVector::from_iterator(
            self.proj.len(),
            self.proj.iter().zip(self.eigenvalues.iter()).map(|(c, s)| c / (s.max(0.0) + lambda)),
        );
        let beta = if self.dual {
            self.z.transpose() * (&self.eigenvectors * scaled)
        } else {
            &self.eigenvectors * scaled
        };
        Ok(RidgeModel {
            intercept: self.y_mean,
            coefficients: beta.iter().copied().collect(),
            lambda,
            scaler: self.scaler.clone(),
        })
    }
}

/// Solves `(ZᵀZ + λI)β = Zᵀ(y − ȳ)` on features standardized with the
/// training rows; intercept = ȳ.
pub fn ridge_fit(x: &Matrix, y: &[f64], lambda: f64) -> Result<RidgeModel, RegressionError> {
    RidgePath::new(x, y)?.fit(lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig { folds: 5, seed: 0 }
    }
}

/// Seeded fold assignment: a shuffled order dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % folds;
    }
    fold
}

/// Mean validation RMSE per grid value.
pub fn cv_rmse(x: &Matrix, y: &[f64], grid: &[f64], cv: &CvConfig, exec: Execution) -> Result<Vec<f64>, RegressionError> {
    check_inputs(x, y)?;
    if grid.is_empty() {
        return Err(RegressionError::EmptyGrid);
    }
    if cv.folds < 2 || x.rows() < cv.folds {
        return Err(RegressionError::TooFewSamples { needed: cv.folds.max(2), got: x.rows() });
    }
    let fold = fold_assignment(x.rows(), cv.folds, cv.seed);
    let per_fold = par::try_map(exec, &(0..cv.folds).collect::<Vec<_>>(), |&f| {
        let train: Vec<usize> = (0..x.rows()).filter(|&i| fold[i] != f).collect();
        let valid: Vec<usize> = (0..x.rows()).filter(|&i| fold[i] == f).collect();
        let ytr: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let path = RidgePath::new(&x.select_rows(&train), &ytr)?;
        let xv = x.select_rows(&valid);
        grid.iter()
            .map(|&l| {
                let m = path.fit(l)?;
                let se: f64 = valid.iter().zip(m.predict(&xv)).map(|(&i, p)| (p - y[i]).powi(2)).sum();
                Ok((se / valid.len() as f64).sqrt())
            })
            .collect::<Result<Vec<f64>, RegressionError>>()
    })?;
    Ok((0..grid.len()).map(|g| per_fold.iter().map(|r| r[g]).sum::<f64>() / cv.folds as f64).collect())
}

/// Grid value with minimal mean validation RMSE; ties go to the smaller λ.
pub fn tune_lambda(x: &Matrix, y: &[f64], grid: &[f64], cv: &CvConfig, exec: Execution) -> Result<f64, RegressionError> {
    if grid.len() == 1 {
        return Ok(grid[0]);
    }
    let scores = cv_rmse(x, y, grid, cv, exec)?;
    let mut best = 0;
    for i in 1..grid.len() {
        if scores[i] < scores[best] || (scores[i] == scores[best] && grid[i] < grid[best]) {
            best = i;
        }
    }
    Ok(grid[best])
}

/// Tunes λ by cross-validation, then refits on all rows.
pub fn ridge_fit_tuned(
    x: &Matrix,
    y: &[f64],
    grid: &[f64],
    cv: &CvConfig,
    exec: Execution,
) -> Result<RidgeModel, RegressionError> {
    let lambda = tune_lambda(x, y, grid, cv, exec)?;
    ridge_fit(x, y, lambda)
}
