//! Multilayer-perceptron source classifier: ReLU hidden layers, softmax
//! output, cross-entropy loss, mini-batch SGD with momentum.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::RegressionError;
use crate::clustering::StandardScaler;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub validation_fraction: f64,
    pub l2: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: vec![64, 64],
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 32,
            max_epochs: 150,
            patience: 15,
            validation_fraction: 0.2,
            l2: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Layer {
    inputs: usize,
    outputs: usize,
    /// Row-major `outputs × inputs`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Layer {
    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let w = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            out.push(self.bias[o] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpClassifier {
    pub layer_sizes: Vec<usize>,
    layers: Vec<Layer>,
    pub scaler: StandardScaler,
    pub n_classes: usize,
    pub config: MlpConfig,
    pub epochs_run: usize,
    /// False when training stopped at the epoch cap while validation loss
    /// was still improving.
    pub converged: bool,
    pub best_validation_loss: f64,
}

fn softmax_in_place(v: &mut [f64]) {
    let m = v.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut s = 0.0;
    for x in v.iter_mut() {
        *x = (*x - m).exp();
        s += *x;
    }
    for x in v.iter_mut() {
        *x /= s;
    }
}

/// Activations of every layer for one standardized input.
fn forward_all(layers: &[Layer], z: &[f64]) -> Vec<Vec<f64>> {
    let mut acts = vec![z.to_vec()];
    for (i, layer) in layers.iter().enumerate() {
        let mut out = Vec::new();
        layer.forward(acts.last().unwrap(), &mut out);
        if i + 1 < layers.len() {
            out.iter_mut().for_each(|v| *v = v.max(0.0));
        } else {
            softmax_in_place(&mut out);
        }
        acts.push(out);
    }
    acts
}

fn mean_loss(layers: &[Layer], z: &Matrix, y: &[usize], idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 0.0;
    }
    idx.iter().map(|&i| -forward_all(layers, z.row(i)).last().unwrap()[y[i]].max(1e-300).ln()).sum::<f64>() / idx.len() as f64
}

impl MlpClassifier {
    pub fn predict_proba_row(&self, row: &[f64]) -> Vec<f64> {
        let z = self.scaler.transform_row(row);
        forward_all(&self.layers, &z).pop().unwrap()
    }

    /// 0-based class index of the largest probability; ties to the lower index.
    pub fn predict_row(&self, row: &[f64]) -> usize {
        let p = self.predict_proba_row(row);
        (0..p.len()).fold(0, |b, i| if p[i] > p[b] { i } else { b })
    }

    pub fn predict(&self, x: &Matrix) -> Vec<usize> {
        x.iter_rows().map(|r| self.predict_row(r)).collect()
    }
}

/// Trains on the `subset` columns of `x` against 0-based class labels and
/// returns the snapshot with the lowest validation loss.
pub fn mlp_fit(x: &Matrix, subset: &[usize], y: &[usize], cfg: &MlpConfig) -> Result<MlpClassifier, RegressionError> {
    if x.rows() != y.len() {
        return Err(RegressionError::DimensionMismatch { expected: x.rows(), got: y.len() });
    }
    let n_classes = y.iter().max().map_or(0, |m| m + 1);
    let present = (0..n_classes).filter(|c| y.contains(c)).count();
    if present < 2 {
        return Err(RegressionError::TooFewClasses(present));
    }
    let scaler = StandardScaler::fit_lenient(x, subset);
    let z = scaler.transform(x);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut sizes = vec![z.cols()];
    sizes.extend(&cfg.hidden);
    sizes.push(n_classes);
    let mut layers: Vec<Layer> = sizes
        .windows(2)
        .map(|w| {
            let he = Normal::new(0.0, (2.0 / w[0] as f64).sqrt()).unwrap();
            Layer { inputs: w[0], outputs: w[1], weights: (0..w[0] * w[1]).map(|_| he.sample(&mut rng)).collect(), bias: vec![0.0; w[1]] }
        })
        .collect();
    let mut velocity: Vec<(Vec<f64>, Vec<f64>)> = layers.iter().map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()])).collect();

    let mut order: Vec<usize> = (0..x.rows()).collect();
    order.shuffle(&mut rng);
    let n_valid = ((x.rows() as f64 * cfg.validation_fraction).round() as usize).min(x.rows().saturating_sub(2));
    let (valid, train) = order.split_at(n_valid);
    let (valid, mut train) = (valid.to_vec(), train.to_vec());
    let monitor: Vec<usize> = if valid.is_empty() { train.clone() } else { valid.clone() };

    let mut best = (mean_loss(&layers, &z, y, &monitor), layers.clone());
    let mut since_best = 0;
    let mut converged = false;
    let mut epochs_run = 0;
    for _ in 0..cfg.max_epochs {
        epochs_run += 1;
        train.shuffle(&mut rng);
        for batch in train.chunks(cfg.batch_size.max(1)) {
            let mut grads: Vec<(Vec<f64>, Vec<f64>)> = layers.iter().map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()])).collect();
            for &i in batch {
                let acts = forward_all(&layers, z.row(i));
                let mut delta = acts.last().unwrap().clone();
                delta[y[i]] -= 1.0;
                for li in (0..layers.len()).rev() {
                    let input = &acts[li];
                    let layer = &layers[li];
                    let (gw, gb) = &mut grads[li];
                    for o in 0..layer.outputs {
                        gb[o] += delta[o];
                        let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                        for (g, a) in row.iter_mut().zip(input) {
                            *g += delta[o] * a;
                        }
                    }
                    if li > 0 {
                        let mut prev = vec![0.0; layer.inputs];
                        for o in 0..layer.outputs {
                            let w = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                            for (p, wv) in prev.iter_mut().zip(w) {
                                *p += delta[o] * wv;
                            }
                        }
                        for (p, a) in prev.iter_mut().zip(input) {
                            if *a <= 0.0 {
                                *p = 0.0;
                            }
                        }
                        delta = prev;
                    }
                }
            }
            let scale = 1.0 / batch.len() as f64;
            for ((layer, (gw, gb)), (vw, vb)) in layers.iter_mut().zip(&grads).zip(velocity.iter_mut()) {
                for ((w, g), v) in layer.weights.iter_mut().zip(gw).zip(vw.iter_mut()) {
                    *v = cfg.momentum * *v - cfg.learning_rate * (g * scale + cfg.l2 * *w);
                    *w += *v;
                }
                for ((b, g), v) in layer.bias.iter_mut().zip(gb).zip(vb.iter_mut()) {
                    *v = cfg.momentum * *v - cfg.learning_rate * g * scale;
                    *b += *v;
                }
            }
        }
        let loss = mean_loss(&layers, &z, y, &monitor);
        if loss < best.0 - 1e-9 {
            best = (loss, layers.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        log::warn!("MLP reached the epoch cap ({}) before validation loss settled", cfg.max_epochs);
    }
    Ok(MlpClassifier {
        layer_sizes: sizes,
        layers: best.1,
        scaler,
        n_classes,
        config: cfg.clone(),
        epochs_run,
        converged,
        best_validation_loss: best.0,
    })
}
