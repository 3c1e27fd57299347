//! One-feature logistic regression by damped Newton iterations.
//!
//! Maximizes `Σ [yᵢ·zᵢ − log(1 + e^{zᵢ})] − ½·λ·β₁²` with `zᵢ = β₀ + β₁·xᵢ`;
//! the intercept is not penalized. The slope penalty keeps the optimum finite
//! when the classes are perfectly separated.

use serde::{Deserialize, Serialize};

use super::ClusterError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub lambda: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig { lambda: 1e-4, max_iter: 500, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub beta0: f64,
    pub beta1: f64,
    pub iterations: usize,
    pub grad_norm: f64,
}

impl LogisticFit {
    /// P(y = 1 | x).
    pub fn probability(&self, x: f64) -> f64 {
        sigmoid(self.beta0 + self.beta1 * x)
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn objective(x: &[f64], y: &[bool], b0: f64, b1: f64, lambda: f64) -> f64 {
    let ll: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let z = b0 + b1 * xi;
            (if yi { z } else { 0.0 }) - softplus(z)
        })
        .sum();
    ll - 0.5 * lambda * b1 * b1
}

/// Gradient and (negative) Hessian of the penalized log-likelihood.
fn derivatives(x: &[f64], y: &[bool], b0: f64, b1: f64, lambda: f64) -> ([f64; 2], [f64; 3]) {
    let (mut g0, mut g1, mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let p = sigmoid(b0 + b1 * xi);
        let r = (if yi { 1.0 } else { 0.0 }) - p;
        let w = p * (1.0 - p);
        g0 += r;
        g1 += r * xi;
        h00 += w;
        h01 += w * xi;
        h11 += w * xi * xi;
    }
    ([g0, g1 - lambda * b1], [h00, h01, h11 + lambda])
}

/// Fits `P(y = 1 | x) = σ(β₀ + β₁x)`; `y = true` marks the second class.
pub fn fit_logistic(x: &[f64], y: &[bool], cfg: &LogisticConfig) -> Result<LogisticFit, ClusterError> {
    if x.len() != y.len() {
        return Err(ClusterError::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    if !y.iter().any(|&v| v) || y.iter().all(|&v| v) {
        return Err(ClusterError::SingleClass);
    }
    let (mut b0, mut b1) = (0.0, 0.0);
    let mut f = objective(x, y, b0, b1, cfg.lambda);
    let mut grad_norm = f64::INFINITY;
    for it in 0..cfg.max_iter {
        let (g, h) = derivatives(x, y, b0, b1, cfg.lambda);
        grad_norm = g[0].hypot(g[1]);
        if grad_norm < cfg.tol {
            return Ok(LogisticFit { beta0: b0, beta1: b1, iterations: it, grad_norm });
        }
        // Newton direction solves H·d = g for the concave objective.
        let det = h[0] * h[2] - h[1] * h[1];
        let (mut d0, mut d1) = if det > 1e-300 * h[0].abs().max(h[2].abs()).max(1.0) {
            ((h[2] * g[0] - h[1] * g[1]) / det, (h[0] * g[1] - h[1] * g[0]) / det)
        } else {
            (g[0], g[1])
        };
        if d0 * g[0] + d1 * g[1] <= 0.0 {
            d0 = g[0];
            d1 = g[1];
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let (n0, n1) = (b0 + step * d0, b1 + step * d1);
            let fn_ = objective(x, y, n0, n1, cfg.lambda);
            // summed objective carries rounding of order n·ε·|f|
            if fn_ >= f - 1e-13 * f.abs() {
                b0 = n0;
                b1 = n1;
                f = fn_;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // no ascent is representable; stationary to working precision
            let (g, _) = derivatives(x, y, b0, b1, cfg.lambda);
            grad_norm = g[0].hypot(g[1]);
            if grad_norm < cfg.tol {
                return Ok(LogisticFit { beta0: b0, beta1: b1, iterations: it + 1, grad_norm });
            }
            break;
        }
    }
    let (g, _) = derivatives(x, y, b0, b1, cfg.lambda);
    let final_norm = g[0].hypot(g[1]);
    if final_norm < cfg.tol {
        return Ok(LogisticFit { beta0: b0, beta1: b1, iterations: cfg.max_iter, grad_norm: final_norm });
    }
    Err(ClusterError::NoConvergence { grad_norm: final_norm.min(grad_norm) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn label_flip_flips_slope() {
        let x: Vec<f64> = (-20..=20).map(|i| i as f64 / 10.0).collect();
        let y: Vec<bool> = x.iter().enumerate().map(|(i, &v)| v + 0.6 * ((i * 37 % 11) as f64 / 5.0 - 1.0) > 0.0).collect();
        let flipped: Vec<bool> = y.iter().map(|v| !v).collect();
        let a = fit_logistic(&x, &y, &LogisticConfig::default()).unwrap();
        let b = fit_logistic(&x, &flipped, &LogisticConfig::default()).unwrap();
        assert!((a.beta1 + b.beta1).abs() < 1e-9);
        assert!((a.beta0 + b.beta0).abs() < 1e-9);
        assert!(a.grad_norm < 1e-8);
    }

    #[test]
    fn recovers_generating_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let x: Vec<f64> = (0..n).map(|_| { let s: f64 = StandardNormal.sample(&mut rng); 2.0 + 1.5 * s }).collect();
        let y: Vec<bool> = x.iter().map(|&v| rng.random::<f64>() < sigmoid(-4.0 + 2.0 * v)).collect();
        let fit = fit_logistic(&x, &y, &LogisticConfig::default()).unwrap();
        assert!((fit.beta0 + 4.0).abs() < 0.05 * 4.0, "{fit:?}");
        assert!((fit.beta1 - 2.0).abs() < 0.05 * 2.0, "{fit:?}");
    }

    #[test]
    fn separated_classes_converge_inside_gap() {
        let x = [-3.0, -2.5, -2.0, -1.1, 0.4, 1.0, 1.5, 2.2];
        let y = [false, false, false, false, true, true, true, true];
        let fit = fit_logistic(&x, &y, &LogisticConfig::default()).unwrap();
        let c = -fit.beta0 / fit.beta1;
        assert!(c > -1.1 && c < 0.4, "c = {c}");
        assert!(fit.grad_norm < 1e-8);
    }

    #[test]
    fn single_class_rejected() {
        assert_eq!(fit_logistic(&[1.0, 2.0], &[true, true], &LogisticConfig::default()).unwrap_err(), ClusterError::SingleClass);
    }

    #[test]
    fn reports_non_convergence() {
        let x: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let y: Vec<bool> = x.iter().map(|&v| (v as usize) % 3 == 0).collect();
        let cfg = LogisticConfig { max_iter: 1, ..Default::default() };
        assert!(matches!(fit_logistic(&x, &y, &cfg), Err(ClusterError::NoConvergence { .. })));
    }
}
