//! Brain injury criteria computed from a kinematic set.
//!
//! Integrals use the rectangle rule (each sample covers one sampling interval),
//! so a constant pulse of `k` samples integrates to exactly `k · dt · value`.
//! Criteria expressed in g divide linear acceleration by [`STANDARD_GRAVITY`].
//!
//! Nine criteria follow their published definitions. Six (PCS, PRHIC, KLC,
//! CIBIC, DAMAGE, BAM) are **placeholder proxies**: simple, documented
//! transforms that fill the slot so the feature count stays fixed. They are not
//! faithful to the original metrics and can be swapped through
//! [`BicRegistry::replace`].

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::signal::{KinematicsSet, STANDARD_GRAVITY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BicName {
    Si,
    Hic,
    Gambit,
    Hip,
    Pcs,
    KinematicBric,
    Prhic,
    Klc,
    Ric,
    Bric,
    Cp,
    Rvci,
    Cibic,
    Damage,
    Bam,
}

impl BicName {
    pub const ALL: [BicName; 15] = [
        BicName::Si,
        BicName::Hic,
        BicName::Gambit,
        BicName::Hip,
        BicName::Pcs,
        BicName::KinematicBric,
        BicName::Prhic,
        BicName::Klc,
        BicName::Ric,
        BicName::Bric,
        BicName::Cp,
        BicName::Rvci,
        BicName::Cibic,
        BicName::Damage,
        BicName::Bam,
    ];

    pub fn feature_name(self) -> &'static str {
        match self {
            BicName::Si => "bic_si",
            BicName::Hic => "bic_hic15",
            BicName::Gambit => "bic_gambit",
            BicName::Hip => "bic_hip",
            BicName::Pcs => "bic_pcs",
            BicName::KinematicBric => "bic_kinematic_bric",
            BicName::Prhic => "bic_prhic",
            BicName::Klc => "bic_klc",
            BicName::Ric => "bic_ric36",
            BicName::Bric => "bic_bric",
            BicName::Cp => "bic_cp",
            BicName::Rvci => "bic_rvci",
            BicName::Cibic => "bic_cibic",
            BicName::Damage => "bic_damage",
            BicName::Bam => "bic_bam",
        }
    }

    /// Accepts the feature name or the common abbreviation (case-insensitive).
    pub fn parse(s: &str) -> Option<BicName> {
        let lower = s.trim().to_ascii_lowercase();
        BicName::ALL.into_iter().find(|b| {
            let f = b.feature_name();
            lower == f || lower == f.trim_start_matches("bic_") || lower == b.abbreviation().to_ascii_lowercase()
        })
    }

    pub fn abbreviation(self) -> &'static str {
        match self {
            BicName::Si => "SI",
            BicName::Hic => "HIC",
            BicName::Gambit => "GAMBIT",
            BicName::Hip => "HIP",
            BicName::Pcs => "PCS",
            BicName::KinematicBric => "BRIC-K",
            BicName::Prhic => "PRHIC",
            BicName::Klc => "KLC",
            BicName::Ric => "RIC",
            BicName::Bric => "BrIC",
            BicName::Cp => "CP",
            BicName::Rvci => "RVCI",
            BicName::Cibic => "CIBIC",
            BicName::Damage => "DAMAGE",
            BicName::Bam => "BAM",
        }
    }
}

/// A criterion plugged into one of the 15 slots.
pub trait BicMetric: Send + Sync {
    fn name(&self) -> BicName;
    fn evaluate(&self, kin: &KinematicsSet) -> Result<f64, FeatureError>;
    /// True for stand-in proxies that do not reproduce the published metric.
    fn is_placeholder(&self) -> bool {
        false
    }
}

/// Ordered registry with one metric per slot.
#[derive(Clone)]
pub struct BicRegistry {
    metrics: Vec<Arc<dyn BicMetric>>,
}

impl std::fmt::Debug for BicRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.metrics.iter().map(|m| m.name())).finish()
    }
}

impl Default for BicRegistry {
    fn default() -> Self {
        BicRegistry { metrics: BicName::ALL.iter().map(|&n| Arc::new(Builtin(n)) as Arc<dyn BicMetric>).collect() }
    }
}

impl BicRegistry {
    /// Swaps the metric occupying `metric.name()`'s slot.
    pub fn replace(&mut self, metric: Arc<dyn BicMetric>) {
        let slot = BicName::ALL.iter().position(|&n| n == metric.name()).expect("every name has a slot");
        self.metrics[slot] = metric;
    }

    pub fn get(&self, name: BicName) -> &Arc<dyn BicMetric> {
        &self.metrics[BicName::ALL.iter().position(|&n| n == name).unwrap()]
    }

    pub fn evaluate_all(&self, kin: &KinematicsSet) -> Result<Vec<f64>, FeatureError> {
        self.metrics.iter().map(|m| m.evaluate(kin)).collect()
    }

    pub fn placeholders(&self) -> Vec<BicName> {
        self.metrics.iter().filter(|m| m.is_placeholder()).map(|m| m.name()).collect()
    }
}

/// Evaluates one criterion by name with the built-in registry.
pub fn evaluate_bic(name: &str, kin: &KinematicsSet) -> Result<f64, FeatureError> {
    let bic = BicName::parse(name).ok_or_else(|| FeatureError::UnknownBic(name.to_string()))?;
    Builtin(bic).evaluate(kin)
}

struct Builtin(BicName);

impl BicMetric for Builtin {
    fn name(&self) -> BicName {
        self.0
    }

    fn is_placeholder(&self) -> bool {
        matches!(self.0, BicName::Pcs | BicName::Prhic | BicName::Klc | BicName::Cibic | BicName::Damage | BicName::Bam)
    }

    fn evaluate(&self, kin: &KinematicsSet) -> Result<f64, FeatureError> {
        if kin.is_empty() {
            return Err(FeatureError::EmptySignal);
        }
        let n = kin.len();
        if [&kin.ang_vel, &kin.ang_acc, &kin.ang_jerk].iter().any(|c| c.len() != n) {
            return Err(FeatureError::UnitError("kinematic channels have unequal lengths".into()));
        }
        Ok(match self.0 {
            BicName::Si => severity_index(kin),
            BicName::Hic => hic(kin, 0.015),
            BicName::Gambit => gambit(kin),
            BicName::Hip => head_impact_power(kin),
            BicName::Pcs => pcs_proxy(kin),
            BicName::KinematicBric => kinematic_bric(kin),
            BicName::Prhic => prhic_proxy(kin),
            BicName::Klc => klc_proxy(kin),
            BicName::Ric => ric(kin, 0.036),
            BicName::Bric => bric(kin),
            BicName::Cp => combined_probability(kin),
            BicName::Rvci => rvci(kin, 0.010),
            BicName::Cibic => cibic_proxy(kin),
            BicName::Damage => damage_proxy(kin),
            BicName::Bam => bam_proxy(kin),
        })
    }
}

fn peak(s: &[f64]) -> f64 {
    s.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn in_g(kin: &KinematicsSet) -> Vec<f64> {
    kin.lin_acc.resultant.iter().map(|a| a / STANDARD_GRAVITY).collect()
}

/// Running rectangle-rule integral, inclusive of the current sample.
fn cumulative(s: &[f64], dt: f64) -> Vec<f64> {
    let mut acc = 0.0;
    s.iter()
        .map(|v| {
            acc += v * dt;
            acc
        })
        .collect()
}

/// `max (t2 - t1) · [mean of x over [t1, t2]]^2.5` with window ≤ `max_window` s.
pub fn hic_form(x: &[f64], dt: f64, max_window: f64) -> f64 {
    let w = ((max_window / dt) + 1e-9).floor() as usize;
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v.max(0.0) * dt);
    }
    let mut best = 0.0f64;
    for i in 0..x.len() {
        for j in (i + 1)..=(i + w).min(x.len()) {
            let dur = (j - i) as f64 * dt;
            let mean = (prefix[j] - prefix[i]) / dur;
            best = best.max(dur * mean.powf(2.5));
        }
    }
    best
}

/// SI = ∫ a(t)^2.5 dt, a in g.
fn severity_index(kin: &KinematicsSet) -> f64 {
    in_g(kin).iter().map(|a| a.powf(2.5)).sum::<f64>() * kin.dt()
}

/// HIC with a maximum window of `window` seconds (HIC15 for 0.015).
fn hic(kin: &KinematicsSet, window: f64) -> f64 {
    hic_form(&in_g(kin), kin.dt(), window)
}

/// Rotational injury criterion: HIC form applied to resultant angular acceleration.
fn ric(kin: &KinematicsSet, window: f64) -> f64 {
    hic_form(&kin.ang_acc.resultant, kin.dt(), window)
}

/// GAMBIT with critical values 250 g and 25 000 rad/s², exponents 2.
fn gambit(kin: &KinematicsSet) -> f64 {
    in_g(kin)
        .iter()
        .zip(&kin.ang_acc.resultant)
        .map(|(a, al)| ((a / 250.0).powi(2) + (al / 25_000.0).powi(2)).sqrt())
        .fold(0.0, f64::max)
}

const HEAD_MASS_KG: f64 = 4.5;
const HEAD_INERTIA: [f64; 3] = [0.016, 0.024, 0.022];

/// Head impact power in kW: max over time of Σ m·aᵢ·∫aᵢ + Σ Iᵢ·αᵢ·∫αᵢ.
fn head_impact_power(kin: &KinematicsSet) -> f64 {
    let dt = kin.dt();
    let mut power = vec![0.0; kin.len()];
    for (a, inertia) in kin.lin_acc.axes.components().into_iter().zip([HEAD_MASS_KG; 3]) {
        for ((p, ai), vi) in power.iter_mut().zip(a).zip(cumulative(a, dt)) {
            *p += inertia * ai * vi;
        }
    }
    for (al, inertia) in kin.ang_acc.axes.components().into_iter().zip(HEAD_INERTIA) {
        for ((p, ai), wi) in power.iter_mut().zip(al).zip(cumulative(al, dt)) {
            *p += inertia * ai * wi;
        }
    }
    power.into_iter().fold(0.0, f64::max) / 1000.0
}

const OMEGA_CRIT_BRIC_K: f64 = 46.41;
const ALPHA_CRIT_BRIC_K: f64 = 24_130.0;

/// Kinematic rotational criterion: peak ω / 46.41 + peak α / 24 130.
fn kinematic_bric(kin: &KinematicsSet) -> f64 {
    peak(&kin.ang_vel.resultant) / OMEGA_CRIT_BRIC_K + peak(&kin.ang_acc.resultant) / ALPHA_CRIT_BRIC_K
}

const BRIC_CRIT: [f64; 3] = [66.25, 56.45, 42.87];

/// BrIC from per-axis angular velocity peaks.
fn bric(kin: &KinematicsSet) -> f64 {
    kin.ang_vel
        .axes
        .components()
        .into_iter()
        .zip(BRIC_CRIT)
        .map(|(w, c)| (peak(w) / c).powi(2))
        .sum::<f64>()
        .sqrt()
}

// Combined probability of concussion coefficients (a in g, α in rad/s²).
const CP_B0: f64 = -10.2;
const CP_B1: f64 = 0.0433;
const CP_B2: f64 = 0.000873;
const CP_B3: f64 = -9.2e-7;

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Combined probability from peak a (g), peak α and their interaction,
/// reported as the probability in excess of the zero-load value and
/// clipped to [0, 1].
fn combined_probability(kin: &KinematicsSet) -> f64 {
    let a = peak(&kin.lin_acc.resultant) / STANDARD_GRAVITY;
    let al = peak(&kin.ang_acc.resultant);
    let p = logistic(CP_B0 + CP_B1 * a + CP_B2 * al + CP_B3 * a * al);
    let p0 = logistic(CP_B0);
    ((p - p0) / (1.0 - p0)).clamp(0.0, 1.0)
}

/// RVCI: max over windows ≤ `window` s of |∫α dt| (vector norm, unit weights).
fn rvci(kin: &KinematicsSet, window: f64) -> f64 {
    let dt = kin.dt();
    let w = ((window / dt) + 1e-9).floor() as usize;
    let prefix: Vec<Vec<f64>> = kin
        .ang_acc
        .axes
        .components()
        .iter()
        .map(|s| {
            let mut p = vec![0.0];
            for v in s.iter() {
                p.push(p.last().unwrap() + v * dt);
            }
            p
        })
        .collect();
    let n = kin.len();
    let mut best = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..=(i + w).min(n) {
            let s: f64 = prefix.iter().map(|p| (p[j] - p[i]).powi(2)).sum();
            best = best.max(s.sqrt());
        }
    }
    best
}

// ---- placeholder proxies -------------------------------------------------

/// PLACEHOLDER: equal-weight sum of normalized peaks
/// (a / 100 g + α / 10⁴ rad/s² + ω / 50 rad/s + HIC15 / 1000).
fn pcs_proxy(kin: &KinematicsSet) -> f64 {
    peak(&kin.lin_acc.resultant) / STANDARD_GRAVITY / 100.0
        + peak(&kin.ang_acc.resultant) / 1.0e4
        + peak(&kin.ang_vel.resultant) / 50.0
        + hic(kin, 0.015) / 1000.0
}

/// PLACEHOLDER: HIC form (15 ms) applied to rotational power |Σ Iᵢ αᵢ ωᵢ| in kW.
fn prhic_proxy(kin: &KinematicsSet) -> f64 {
    let n = kin.len();
    let power: Vec<f64> = (0..n)
        .map(|k| {
            let al = [kin.ang_acc.axes.x[k], kin.ang_acc.axes.y[k], kin.ang_acc.axes.z[k]];
            let w = [kin.ang_vel.axes.x[k], kin.ang_vel.axes.y[k], kin.ang_vel.axes.z[k]];
            (0..3).map(|i| HEAD_INERTIA[i] * al[i] * w[i]).sum::<f64>().abs() / 1000.0
        })
        .collect();
    hic_form(&power, kin.dt(), 0.015)
}

/// PLACEHOLDER: 0.004718 · peak ω + 0.000224 · HIC36.
fn klc_proxy(kin: &KinematicsSet) -> f64 {
    0.004718 * peak(&kin.ang_vel.resultant) + 0.000224 * hic(kin, 0.036)
}

const CIBIC_TAU: f64 = 0.015;

/// PLACEHOLDER: peak magnitude of angular velocity passed through a
/// first-order lag with τ = 15 ms.
fn cibic_proxy(kin: &KinematicsSet) -> f64 {
    let dt = kin.dt();
    let alpha = dt / (CIBIC_TAU + dt);
    let mut state = [0.0f64; 3];
    let mut best = 0.0f64;
    for k in 0..kin.len() {
        let w = [kin.ang_vel.axes.x[k], kin.ang_vel.axes.y[k], kin.ang_vel.axes.z[k]];
        for i in 0..3 {
            state[i] += alpha * (w[i] - state[i]);
        }
        best = best.max(state.iter().map(|s| s * s).sum::<f64>().sqrt());
    }
    best
}

const DAMAGE_OMEGA_N: f64 = 2.0 * std::f64::consts::PI * 5.0;
const DAMAGE_ZETA: f64 = 0.5;
const DAMAGE_BETA: f64 = 2.9903;

/// PLACEHOLDER: per-axis damped oscillator x'' + 2ζωₙx' + ωₙ²x = αᵢ(t)
/// (ωₙ = 2π·5 rad/s, ζ = 0.5), semi-implicit Euler; returns β·max |x|
/// with β = 2.9903.
fn damage_proxy(kin: &KinematicsSet) -> f64 {
    let dt = kin.dt();
    let mut x = [0.0f64; 3];
    let mut v = [0.0f64; 3];
    let mut best = 0.0f64;
    for k in 0..kin.len() {
        let a = [kin.ang_acc.axes.x[k], kin.ang_acc.axes.y[k], kin.ang_acc.axes.z[k]];
        for i in 0..3 {
            let acc = a[i] - 2.0 * DAMAGE_ZETA * DAMAGE_OMEGA_N * v[i] - DAMAGE_OMEGA_N.powi(2) * x[i];
            v[i] += acc * dt;
            x[i] += v[i] * dt;
        }
        best = best.max(x.iter().map(|s| s * s).sum::<f64>().sqrt());
    }
    DAMAGE_BETA * best
}

/// PLACEHOLDER: peak magnitude of the integrated rotation angle ∫ω dt (rad).
fn bam_proxy(kin: &KinematicsSet) -> f64 {
    let dt = kin.dt();
    let angles: Vec<Vec<f64>> = kin.ang_vel.axes.components().iter().map(|s| cumulative(s, dt)).collect();
    (0..kin.len())
        .map(|k| angles.iter().map(|a| a[k] * a[k]).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{derive_kinematics, Axes3, ImpactRecording, Source};

    fn kin_from(lin: Axes3, ang: Axes3) -> KinematicsSet {
        let n = lin.len();
        let t = (0..n).map(|i| i as f64 / 1000.0).collect();
        derive_kinematics(&ImpactRecording::new("k", Source::Hm, t, lin, ang, None).unwrap()).unwrap()
    }

    fn square_pulse_100g() -> KinematicsSet {
        let n = 100;
        let mut ax = vec![0.0; n];
        for v in &mut ax[20..35] {
            *v = 100.0 * STANDARD_GRAVITY;
        }
        kin_from(Axes3::new(ax, vec![0.0; n], vec![0.0; n]), Axes3::zeros(n))
    }

    #[test]
    fn hic_and_si_on_square_pulse() {
        let k = square_pulse_100g();
        let hic15 = evaluate_bic("HIC", &k).unwrap();
        let si = evaluate_bic("SI", &k).unwrap();
        assert!((hic15 - 1500.0).abs() < 1e-9 * 1500.0, "{hic15}");
        assert!((si - 1500.0).abs() < 1e-9 * 1500.0, "{si}");
    }

    #[test]
    fn hic_window_limits_the_pulse() {
        // 30 ms at 100 g: HIC15 still only sees 15 ms
        let n = 100;
        let mut a = vec![0.0; n];
        for v in &mut a[10..40] {
            *v = 100.0;
        }
        assert!((hic_form(&a, 1e-3, 0.015) - 1500.0).abs() < 1e-6);
        assert!((hic_form(&a, 1e-3, 0.036) - 3000.0).abs() < 1e-6);
    }

    #[test]
    fn zero_kinematics_give_zero() {
        let k = kin_from(Axes3::zeros(64), Axes3::zeros(64));
        let reg = BicRegistry::default();
        let vals = reg.evaluate_all(&k).unwrap();
        assert_eq!(vals.len(), 15);
        assert!(vals.iter().all(|&v| v == 0.0), "{vals:?}");
    }

    #[test]
    fn closed_form_rotational_criteria() {
        let n = 50;
        let ang = Axes3::new(vec![66.25; n], vec![56.45; n], vec![42.87; n]);
        let k = kin_from(Axes3::zeros(n), ang);
        assert!((bric(&k) - 3f64.sqrt()).abs() < 1e-12);
        let wres = (66.25f64.powi(2) + 56.45f64.powi(2) + 42.87f64.powi(2)).sqrt();
        assert!((kinematic_bric(&k) - wres / 46.41).abs() < 1e-12);
        // ∫ω dt grows linearly: peak angle at the last sample
        assert!((bam_proxy(&k) - wres * n as f64 * 1e-3).abs() < 1e-9);

        // ω_z = 100 t → α_z = 100 everywhere
        let wz: Vec<f64> = (0..n).map(|i| 100.0 * i as f64 / 1000.0).collect();
        let k = kin_from(Axes3::zeros(n), Axes3::new(vec![0.0; n], vec![0.0; n], wz));
        assert!((ric(&k, 0.036) - 0.036 * 100f64.powf(2.5)).abs() < 1e-6);
        assert!((rvci(&k, 0.010) - 100.0 * 0.010).abs() < 1e-9);
        assert!((gambit(&k) - 100.0 / 25_000.0).abs() < 1e-12);
        assert!((kinematic_bric(&k) - (4.9 / 46.41 + 100.0 / 24_130.0)).abs() < 1e-9);
    }

    #[test]
    fn hip_on_constant_linear_acceleration() {
        // a_x = 10 m/s² for all samples: HIP(t) = m·a·(a·t) peaks at the last sample
        let n = 40;
        let k = kin_from(Axes3::new(vec![10.0; n], vec![0.0; n], vec![0.0; n]), Axes3::zeros(n));
        let expected = HEAD_MASS_KG * 10.0 * (10.0 * n as f64 * 1e-3) / 1000.0;
        assert!((head_impact_power(&k) - expected).abs() < 1e-12);
    }

    #[test]
    fn combined_probability_is_bounded_and_monotone() {
        let make = |g: f64| {
            let n = 30;
            let mut ax = vec![0.0; n];
            ax[10] = g * STANDARD_GRAVITY;
            kin_from(Axes3::new(ax, vec![0.0; n], vec![0.0; n]), Axes3::zeros(n))
        };
        let lo = combined_probability(&make(20.0));
        let hi = combined_probability(&make(150.0));
        assert!(lo > 0.0 && lo < hi && hi <= 1.0);
        let z = CP_B0 + CP_B1 * 150.0;
        let p0 = logistic(CP_B0);
        assert!((hi - (logistic(z) - p0) / (1.0 - p0)).abs() < 1e-12);
    }

    #[test]
    fn registry_lookup_and_replacement() {
        assert!(matches!(evaluate_bic("nope", &square_pulse_100g()), Err(FeatureError::UnknownBic(_))));
        assert_eq!(BicName::parse("bic_hic15"), Some(BicName::Hic));
        assert_eq!(BicName::parse("BrIC"), Some(BicName::Bric));
        assert_eq!(BicName::parse("bric_k"), None);

        struct Const;
        impl BicMetric for Const {
            fn name(&self) -> BicName {
                BicName::Damage
            }
            fn evaluate(&self, _: &KinematicsSet) -> Result<f64, FeatureError> {
                Ok(7.0)
            }
        }
        let mut reg = BicRegistry::default();
        assert_eq!(reg.placeholders().len(), 6);
        reg.replace(Arc::new(Const));
        assert_eq!(reg.placeholders().len(), 5);
        let vals = reg.evaluate_all(&square_pulse_100g()).unwrap();
        assert_eq!(vals[13], 7.0);
    }
}
