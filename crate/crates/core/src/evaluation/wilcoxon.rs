//! Wilcoxon signed-rank test on paired samples.
//!
//! Zero differences are dropped; tied magnitudes get midranks. The exact null
//! distribution is enumerated on doubled (integer) ranks for n ≤ 20; larger
//! samples use the normal approximation with tie and continuity corrections.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::EvalError;

pub const EXACT_MAX_N: usize = 20;
pub const MIN_PAIRS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// min(W⁺, W⁻).
    pub w: f64,
    pub p: f64,
    /// Non-zero differences used.
    pub n: usize,
    pub exact: bool,
    /// Every difference was zero; `p` is 1 by convention.
    pub all_zero: bool,
}

/// Midranks (1-based) of `v`.
pub fn midranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// P(T ≤ w) for the signed-rank sum T under the symmetric null, by dynamic
/// programming over doubled ranks.
pub fn exact_lower_tail(ranks: &[f64], w: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &d in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + d] += counts[s];
            }
        }
        reach += d;
    }
    let limit = (2.0 * w).round() as usize;
    let hits: f64 = counts.iter().take(limit.min(total) + 1).sum();
    hits / 2f64.powi(ranks.len() as i32)
}

pub fn normal_lower_tail(ranks: &[f64], w: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&r| r == sorted[i]).count();
        let t = j as f64;
        tie += t * t * t - t;
        i += j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    // continuity correction toward the mean; w is the smaller rank sum
    let z = (w - mean + 0.5) / var.sqrt();
    Normal::standard().cdf(z.min(0.0))
}

struct Prepared {
    ranks: Vec<f64>,
    w: f64,
}

fn prepare(a: &[f64], b: &[f64]) -> Result<Option<Prepared>, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch { expected: a.len(), got: b.len() });
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|v| *v != 0.0).collect();
    if d.is_empty() {
        return Ok(None);
    }
    if d.len() < MIN_PAIRS {
        return Err(EvalError::TooFewPairs { got: d.len(), needed: MIN_PAIRS });
    }
    let ranks = midranks(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let plus: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let minus: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v < 0.0).map(|(_, r)| r).sum();
    Ok(Some(Prepared { ranks, w: plus.min(minus) }))
}

/// Two-sided test; the exact path for n ≤ 20.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult, EvalError> {
    let Some(p) = prepare(a, b)? else {
        return Ok(WilcoxonResult { w: 0.0, p: 1.0, n: 0, exact: true, all_zero: true });
    };
    let n = p.ranks.len();
    let exact = n <= EXACT_MAX_N;
    let tail = if exact { exact_lower_tail(&p.ranks, p.w) } else { normal_lower_tail(&p.ranks, p.w) };
    Ok(WilcoxonResult { w: p.w, p: (2.0 * tail).min(1.0), n, exact, all_zero: false })
}

/// Both p-value paths for the same data: (exact, normal).
pub fn wilcoxon_both_paths(a: &[f64], b: &[f64]) -> Result<(f64, f64), EvalError> {
    let Some(p) = prepare(a, b)? else {
        return Ok((1.0, 1.0));
    };
    Ok(((2.0 * exact_lower_tail(&p.ranks, p.w)).min(1.0), (2.0 * normal_lower_tail(&p.ranks, p.w)).min(1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(a: &[f64], b: &[f64]) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|v| *v != 0.0).collect();
        let ranks = midranks(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
        let plus: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
        let total: f64 = ranks.iter().sum();
        let w = plus.min(total - plus);
        let n = ranks.len();
        let hits = (0u32..1 << n)
            .filter(|mask| (0..n).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum::<f64>() <= w + 1e-9)
            .count();
        (2.0 * hits as f64 / (1u64 << n) as f64).min(1.0)
    }

    #[test]
    fn all_positive_five() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.0; 5]).unwrap();
        assert_eq!(r.w, 0.0);
        assert_eq!(r.p, 0.0625);
        assert!(r.exact);
    }

    #[test]
    fn identical_samples() {
        let r = wilcoxon_signed_rank(&[0.3, 0.4], &[0.3, 0.4]).unwrap();
        assert!(r.all_zero);
        assert_eq!(r.p, 1.0);
        assert!(matches!(wilcoxon_signed_rank(&[1.0, 2.0, 3.0], &[0.0; 3]), Err(EvalError::TooFewPairs { .. })));
    }

    #[test]
    fn midranks_of_ties() {
        assert_eq!(midranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn exact_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for case in 0..1000 {
            let n = rng.random_range(5..=12);
            // a coarse grid forces ties and zero differences
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64).collect();
            match wilcoxon_signed_rank(&a, &b) {
                Ok(r) if !r.all_zero => assert!((r.p - brute_force(&a, &b)).abs() < 1e-12, "case {case}"),
                _ => {}
            }
        }
    }

    #[test]
    fn paths_agree_at_twenty() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let a: Vec<f64> = (0..20).map(|_| rng.random::<f64>()).collect();
            let b: Vec<f64> = (0..20).map(|_| rng.random::<f64>() + 0.1).collect();
            let (e, n) = wilcoxon_both_paths(&a, &b).unwrap();
            assert!((e - n).abs() < 0.02, "{e} vs {n}");
        }
    }
}
