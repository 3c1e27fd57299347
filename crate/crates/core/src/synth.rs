//! Synthetic two-regime benchmark.
//!
//! Each impact's angular velocity and linear acceleration are damped
//! sinusoids `a·e^(−t/τ)·sin(2πft)` along random directions with
//! source-specific frequency and decay ranges. The regime decides which band
//! the peak resultant angular acceleration is drawn from; the angular
//! velocity is rescaled so that the peak measured by the feature pipeline
//! hits the drawn value. The target is
//! `csdm = clip(w_r·f + b_r + ε)` with `r = 1` when that peak is at most θ and
//! `r = 2` above it, `f` a set of peak features and `ε ~ N(0, σ²)`.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::FeatureTable;
use crate::features::{temporal_peaks, FeatureSchema};
use crate::par::{self, Execution};
use crate::regression::{ridge_fit_tuned, RidgeModel, TrainConfig};
use crate::signal::write_signal_file;
use crate::signal::{derive_kinematics, Axes3, Channel, ImpactRecording, KinematicType, SignalError, Source};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
    #[error("{0}")]
    Signal(#[from] SignalError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub source: Source,
    pub count: usize,
    /// Probability that an impact of this source is drawn in regime 2.
    pub regime2_fraction: f64,
    /// Angular-velocity oscillation frequency range, Hz.
    pub rot_freq_hz: (f64, f64),
    /// Angular-velocity decay constant range, ms.
    pub rot_tau_ms: (f64, f64),
    pub lin_freq_hz: (f64, f64),
    pub lin_tau_ms: (f64, f64),
    /// Off-axis secondary rotation amplitude, relative to the primary.
    pub secondary_amplitude: (f64, f64),
    /// Secondary rotation frequency as a multiple of the primary's.
    pub secondary_freq_ratio: (f64, f64),
}

/// `csdm = bias + Σ weights[i]·f[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeMap {
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub sources: Vec<SourceSpec>,
    /// Regime threshold on peak resultant angular acceleration, rad/s².
    pub theta: f64,
    /// Peak resultant angular acceleration ranges for regimes 1 and 2.
    pub alpha_bands: [(f64, f64); 2],
    /// Peak resultant linear acceleration ranges (m/s²) for regimes 1 and 2.
    pub lin_acc_bands: [(f64, f64); 2],
    /// Schema names of the power-1 peak features the maps read.
    pub map_features: Vec<String>,
    pub maps: [RegimeMap; 2],
    pub sigma: f64,
    pub duration_ms: f64,
    pub onset_ms: f64,
    pub sample_rate: f64,
    pub seed: u64,
}

fn spec(source: Source, regime2_fraction: f64, rot: [(f64, f64); 2], lin: [(f64, f64); 2], secondary: [(f64, f64); 2]) -> SourceSpec {
    SourceSpec {
        source,
        count: 100,
        regime2_fraction,
        rot_freq_hz: rot[0],
        rot_tau_ms: rot[1],
        lin_freq_hz: lin[0],
        lin_tau_ms: lin[1],
        secondary_amplitude: secondary[0],
        secondary_freq_ratio: secondary[1],
    }
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            sources: vec![
                // HM spans the on-field ranges so every holdout stays inside the training
                // support; its slow off-axis swing keeps it identifiable
                spec(Source::Hm, 0.5, [(22.0, 48.0), (6.0, 16.0)], [(25.0, 110.0), (3.0, 14.0)], [(0.5, 0.8), (0.2, 0.35)]),
                spec(Source::Cf, 0.3, [(32.0, 40.0), (8.0, 11.0)], [(60.0, 80.0), (5.0, 7.0)], [(0.05, 0.15), (1.3, 1.8)]),
                spec(Source::Mma, 0.7, [(38.0, 46.0), (6.0, 8.0)], [(80.0, 105.0), (3.0, 5.0)], [(0.05, 0.15), (1.3, 1.8)]),
                spec(Source::Nascar, 0.45, [(24.0, 30.0), (12.0, 16.0)], [(28.0, 40.0), (10.0, 14.0)], [(0.05, 0.15), (1.3, 1.8)]),
            ],
            theta: 4500.0,
            alpha_bands: [(1500.0, 3000.0), (6000.0, 9000.0)],
            lin_acc_bands: [(150.0, 1000.0), (150.0, 1000.0)],
            map_features: vec!["ang_vel_res_peak".into(), "lin_acc_res_peak".into()],
            // opposite slopes in linear acceleration: an interaction no additive model captures
            maps: [
                RegimeMap { weights: vec![0.002, 0.0003], bias: 0.05 },
                RegimeMap { weights: vec![0.0, -0.0003], bias: 0.55 },
            ],
            sigma: 0.04,
            duration_ms: 100.0,
            onset_ms: 10.0,
            sample_rate: 1000.0,
            seed: 0,
        }
    }
}

fn check_range(name: &str, r: (f64, f64), positive: bool) -> Result<(), SynthError> {
    let ok = r.0.is_finite() && r.1.is_finite() && r.0 <= r.1 && (!positive || r.0 > 0.0);
    if ok {
        Ok(())
    } else {
        Err(SynthError::InvalidConfig(format!("{name} range {r:?} is invalid")))
    }
}

impl SynthConfig {
    pub fn total(&self) -> usize {
        self.sources.iter().map(|s| s.count).sum()
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        if !(self.theta > 0.0) {
            return bad(format!("theta must be positive, got {}", self.theta));
        }
        if !(self.sigma >= 0.0) {
            return bad(format!("sigma must be non-negative, got {}", self.sigma));
        }
        if self.sources.is_empty() {
            return bad("no sources".into());
        }
        for s in &self.sources {
            if s.count == 0 {
                return bad(format!("source {} has count 0", s.source));
            }
            if !(0.0..=1.0).contains(&s.regime2_fraction) {
                return bad(format!("source {} regime fraction {} outside [0, 1]", s.source, s.regime2_fraction));
            }
            check_range("rotation frequency", s.rot_freq_hz, true)?;
            check_range("rotation decay", s.rot_tau_ms, true)?;
            check_range("linear frequency", s.lin_freq_hz, true)?;
            check_range("linear decay", s.lin_tau_ms, true)?;
            check_range("secondary amplitude", s.secondary_amplitude, false)?;
            check_range("secondary frequency ratio", s.secondary_freq_ratio, true)?;
        }
        for b in self.alpha_bands.iter().chain(&self.lin_acc_bands) {
            check_range("amplitude band", *b, true)?;
        }
        let schema = FeatureSchema::v1();
        for f in &self.map_features {
            match schema.index_of(f) {
                Some(i) if i < 16 => {}
                _ => return bad(format!("map feature `{f}` is not a power-1 peak feature")),
            }
        }
        for m in &self.maps {
            if m.weights.len() != self.map_features.len() {
                return bad(format!("regime map has {} weights for {} features", m.weights.len(), self.map_features.len()));
            }
        }
        if !(self.sample_rate > 0.0) || !(self.duration_ms > self.onset_ms) || self.onset_ms < 0.0 {
            return bad("timing parameters are invalid".into());
        }
        if ((self.duration_ms / 1000.0 * self.sample_rate).round() as usize) < 8 {
            return bad("signals would be shorter than 8 samples".into());
        }
        Ok(())
    }

    /// The negative-control variant: both regimes share map 1, no noise.
    pub fn negative_control(&self) -> SynthConfig {
        SynthConfig { maps: [self.maps[0].clone(), self.maps[0].clone()], sigma: 0.0, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticImpact {
    pub recording: ImpactRecording,
    /// 1 or 2.
    pub regime: u8,
    pub noiseless_csdm: f64,
    pub max_ang_acc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub config: SynthConfig,
    pub impacts: Vec<SyntheticImpact>,
}

impl SyntheticDataset {
    pub fn recordings(&self) -> Vec<ImpactRecording> {
        self.impacts.iter().map(|i| i.recording.clone()).collect()
    }

    pub fn regimes(&self) -> Vec<u8> {
        self.impacts.iter().map(|i| i.regime).collect()
    }
}

fn unit_vector(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-6 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, r: (f64, f64)) -> f64 {
    if r.0 == r.1 {
        r.0
    } else {
        rng.random_range(r.0..r.1)
    }
}

fn damped_sine(t: &[f64], onset: f64, f: f64, tau: f64) -> Vec<f64> {
    t.iter()
        .map(|&ti| {
            let s = ti - onset;
            if s < 0.0 {
                0.0
            } else {
                (-s / tau).exp() * (2.0 * std::f64::consts::PI * f * s).sin()
            }
        })
        .collect()
}

fn along(dir: [f64; 3], s: &[f64], scale: f64) -> Axes3 {
    Axes3::new(
        s.iter().map(|v| dir[0] * v * scale).collect(),
        s.iter().map(|v| dir[1] * v * scale).collect(),
        s.iter().map(|v| dir[2] * v * scale).collect(),
    )
}

fn add(a: &Axes3, b: &Axes3) -> Axes3 {
    let z = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p + q).collect();
    Axes3::new(z(&a.x, &b.x), z(&a.y, &b.y), z(&a.z, &b.z))
}

fn scale_axes(a: &Axes3, s: f64) -> Axes3 {
    let m = |x: &[f64]| x.iter().map(|v| v * s).collect();
    Axes3::new(m(&a.x), m(&a.y), m(&a.z))
}

const ANG_ACC_RES: usize = 11;

fn generate_one(cfg: &SynthConfig, spec: &SourceSpec, id: String, stream: u64) -> Result<SyntheticImpact, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let n = (cfg.duration_ms / 1000.0 * cfg.sample_rate).round() as usize;
    let t: Vec<f64> = (0..n).map(|i| i as f64 / cfg.sample_rate).collect();
    let onset = cfg.onset_ms / 1000.0;

    let drawn_regime = if rng.random::<f64>() < spec.regime2_fraction { 2 } else { 1 };
    let target_alpha = uniform(&mut rng, cfg.alpha_bands[drawn_regime - 1]);
    let target_lin = uniform(&mut rng, cfg.lin_acc_bands[drawn_regime - 1]);

    let f_rot = uniform(&mut rng, spec.rot_freq_hz);
    let tau_rot = uniform(&mut rng, spec.rot_tau_ms) / 1000.0;
    let primary = damped_sine(&t, onset, f_rot, tau_rot);
    let ratio = uniform(&mut rng, spec.secondary_freq_ratio);
    // same number of cycles as the primary before decay
    let secondary = damped_sine(&t, onset, f_rot * ratio, tau_rot / ratio);
    let (u, v) = (unit_vector(&mut rng), unit_vector(&mut rng));
    let omega_shape = add(&along(u, &primary, 1.0), &along(v, &secondary, uniform(&mut rng, spec.secondary_amplitude)));

    let f_lin = uniform(&mut rng, spec.lin_freq_hz);
    let tau_lin = uniform(&mut rng, spec.lin_tau_ms) / 1000.0;
    let lin_shape = along(unit_vector(&mut rng), &damped_sine(&t, onset, f_lin, tau_lin), 1.0);
    let noise: f64 = rng.sample(StandardNormal);

    let shape = ImpactRecording::new(id.clone(), spec.source.clone(), t.clone(), lin_shape.clone(), omega_shape.clone(), None)?;
    let peaks = temporal_peaks(&derive_kinematics(&shape)?).expect("non-empty kinematics");
    let lin_acc = scale_axes(&lin_shape, target_lin / peaks[FeatureSchema::peak_index(KinematicType::LinAcc, Channel::Resultant)]);
    let ang_vel = scale_axes(&omega_shape, target_alpha / peaks[ANG_ACC_RES]);

    let rec = ImpactRecording::new(id, spec.source.clone(), t, lin_acc, ang_vel, None)?;
    let peaks = temporal_peaks(&derive_kinematics(&rec)?).expect("non-empty kinematics");
    let max_ang_acc = peaks[ANG_ACC_RES];
    let regime: u8 = if max_ang_acc > cfg.theta { 2 } else { 1 };
    let schema = FeatureSchema::v1();
    let f: Vec<f64> = cfg.map_features.iter().map(|name| peaks[schema.index_of(name).unwrap()]).collect();
    let map = &cfg.maps[regime as usize - 1];
    let lin = map.bias + map.weights.iter().zip(&f).map(|(w, x)| w * x).sum::<f64>();
    let noiseless = lin.clamp(0.0, 1.0);
    let csdm = (lin + cfg.sigma * noise).clamp(0.0, 1.0);
    Ok(SyntheticImpact { recording: ImpactRecording { csdm: Some(csdm), ..rec }, regime, noiseless_csdm: noiseless, max_ang_acc })
}

/// Deterministic given the config; impact `k` draws from stream `k` of the
/// master seed, so generation order does not matter.
pub fn generate(cfg: &SynthConfig, exec: Execution) -> Result<SyntheticDataset, SynthError> {
    cfg.validate()?;
    let mut jobs = Vec::with_capacity(cfg.total());
    for spec in &cfg.sources {
        for j in 0..spec.count {
            jobs.push((spec, format!("{}-{:04}", spec.source.as_str().to_ascii_lowercase(), j)));
        }
    }
    let indexed: Vec<(usize, &(&SourceSpec, String))> = jobs.iter().enumerate().collect();
    let impacts = par::try_map(exec, &indexed, |(k, (spec, id))| generate_one(cfg, spec, id.clone(), *k as u64))?;
    Ok(SyntheticDataset { config: cfg.clone(), impacts })
}

/// Writes `manifest.csv` (with a trailing `regime` column that ingestion
/// ignores), `signals/<id>.csv`, `truth.csv` and `synth_config.json`.
pub fn write_dataset(ds: &SyntheticDataset, dir: &Path) -> Result<PathBuf, SynthError> {
    let sig_dir = dir.join("signals");
    fs::create_dir_all(&sig_dir)?;
    let mut manifest = String::from("impact_id,source,csdm,signal_path,regime\n");
    let mut truth = String::from("impact_id,regime,noiseless_csdm\n");
    for imp in &ds.impacts {
        let r = &imp.recording;
        let rel = format!("signals/{}.csv", r.impact_id);
        write_signal_file(&dir.join(&rel), r)?;
        manifest.push_str(&format!("{},{},{},{},{}\n", r.impact_id, r.source, r.csdm.expect("labeled"), rel, imp.regime));
        truth.push_str(&format!("{},{},{}\n", r.impact_id, imp.regime, imp.noiseless_csdm));
    }
    let path = dir.join("manifest.csv");
    fs::File::create(&path)?.write_all(manifest.as_bytes())?;
    fs::write(dir.join("truth.csv"), truth)?;
    fs::write(dir.join("synth_config.json"), serde_json::to_string_pretty(&ds.config).expect("config serializes"))?;
    Ok(path)
}

/// Reads `truth.csv`: (impact_id, regime, noiseless_csdm) rows.
pub fn read_truth(path: &Path) -> Result<Vec<(String, u8, f64)>, SynthError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
        let regime = rec[1].parse().map_err(|_| SynthError::InvalidConfig("bad regime".into()))?;
        let c = rec[2].parse().map_err(|_| SynthError::InvalidConfig("bad csdm".into()))?;
        out.push((rec[0].to_string(), regime, c));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSegmentResult {
    pub best_threshold: f64,
    pub best_r2: f64,
    /// Mean averaged R² per threshold, in grid order.
    pub per_threshold: Vec<(f64, f64)>,
}

/// Brute-force reference: for every threshold on `feature`, fit one tuned
/// ridge model per side on each training split and score the matching test
/// split. Returns the threshold with the highest mean averaged R².
pub fn oracle_best_two_segment(
    table: &FeatureTable,
    feature: usize,
    thresholds: &[f64],
    splits: &[(Vec<usize>, Vec<usize>)],
    cfg: &TrainConfig,
) -> Result<TwoSegmentResult, crate::regression::RegressionError> {
    use crate::evaluation::tasks::score;
    let y = table.targets().map_err(|e| crate::regression::RegressionError::Unlabeled(e.to_string()))?;
    let per_threshold = par::try_map(cfg.execution, thresholds, |&th| {
        let mut total = 0.0;
        for (train, test) in splits {
            let fit = |idx: &[usize]| -> Result<RidgeModel, crate::regression::RegressionError> {
                let yr: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
                ridge_fit_tuned(&table.x.select_rows(idx), &yr, &cfg.lambda_grid, &cfg.cv, Execution::Sequential)
            };
            let side = |i: usize| table.x.get(i, feature) > th;
            let hi: Vec<usize> = train.iter().copied().filter(|&i| side(i)).collect();
            let lo: Vec<usize> = train.iter().copied().filter(|&i| !side(i)).collect();
            let all = fit(train)?;
            let m_hi = if hi.len() >= cfg.min_route_size { fit(&hi)? } else { all.clone() };
            let m_lo = if lo.len() >= cfg.min_route_size { fit(&lo)? } else { all.clone() };
            let yhat: Vec<f64> = test
                .iter()
                .map(|&i| {
                    let m = if side(i) { &m_hi } else { &m_lo };
                    m.predict_row(table.x.row(i)).clamp(0.0, 1.0)
                })
                .collect();
            let yt: Vec<f64> = test.iter().map(|&i| y[i]).collect();
            let src: Vec<Source> = test.iter().map(|&i| table.sources[i].clone()).collect();
            let (_, avg, _) = score(&src, &yt, &yhat).map_err(|e| crate::regression::RegressionError::SchemaMismatch(e.to_string()))?;
            total += avg.unwrap_or(f64::NEG_INFINITY);
        }
        Ok::<_, crate::regression::RegressionError>((th, total / splits.len() as f64))
    })?;
    let (best_threshold, best_r2) = per_threshold
        .iter()
        .copied()
        .fold((f64::NAN, f64::NEG_INFINITY), |b, x| if x.1 > b.1 { x } else { b });
    Ok(TwoSegmentResult { best_threshold, best_r2, per_threshold })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        let mut c = SynthConfig::default();
        for s in &mut c.sources {
            s.count = 10;
        }
        c
    }

    #[test]
    fn deterministic_and_schedule_independent() {
        let a = generate(&small(), Execution::Parallel).unwrap();
        let b = generate(&small(), Execution::Sequential).unwrap();
        assert_eq!(a, b);
        let other = generate(&SynthConfig { seed: 1, ..small() }, Execution::Parallel).unwrap();
        assert_ne!(a.impacts[0].recording, other.impacts[0].recording);
    }

    #[test]
    fn peak_alpha_hits_the_drawn_band() {
        let ds = generate(&small(), Execution::Parallel).unwrap();
        let cfg = &ds.config;
        for imp in &ds.impacts {
            let (lo, hi) = cfg.alpha_bands[imp.regime as usize - 1];
            assert!(imp.max_ang_acc >= lo * (1.0 - 1e-12) && imp.max_ang_acc <= hi * (1.0 + 1e-12));
        }
        assert!(ds.impacts.iter().any(|i| i.regime == 1) && ds.impacts.iter().any(|i| i.regime == 2));
    }

    #[test]
    fn noiseless_regime_one_is_exact() {
        let mut cfg = small();
        cfg.sigma = 0.0;
        cfg.alpha_bands[0] = (cfg.theta / 2.0, cfg.theta / 2.0);
        cfg.sources.iter_mut().for_each(|s| s.regime2_fraction = 0.0);
        let ds = generate(&cfg, Execution::Sequential).unwrap();
        for imp in &ds.impacts {
            assert_eq!(imp.regime, 1);
            assert!((imp.max_ang_acc - cfg.theta / 2.0).abs() < 1e-9 * cfg.theta);
            let peaks = temporal_peaks(&derive_kinematics(&imp.recording).unwrap()).unwrap();
            let f = [peaks[7], peaks[3]];
            let m = &cfg.maps[0];
            let expected = (m.bias + (m.weights[0] * f[0] + m.weights[1] * f[1])).clamp(0.0, 1.0);
            assert!((imp.recording.csdm.unwrap() - expected).abs() < 1e-15, "{} vs {expected}", imp.recording.csdm.unwrap());
        }
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(SynthConfig { theta: 0.0, ..small() }.validate().is_err());
        assert!(SynthConfig { sigma: -1.0, ..small() }.validate().is_err());
        let mut c = small();
        c.sources[0].count = 0;
        assert!(c.validate().is_err());
        let mut c = small();
        c.map_features = vec!["bic_si".into(), "lin_acc_res_peak".into()];
        assert!(c.validate().is_err());
    }

    #[test]
    fn written_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = generate(&small(), Execution::Parallel).unwrap();
        let manifest = write_dataset(&ds, dir.path()).unwrap();
        let loaded = crate::signal::load_dataset(&manifest).unwrap();
        assert_eq!(loaded, ds.recordings());
        let truth = read_truth(&dir.path().join("truth.csv")).unwrap();
        assert_eq!(truth.len(), ds.impacts.len());
        assert!(truth.iter().zip(&ds.impacts).all(|(t, i)| t.1 == i.regime && t.2 == i.noiseless_csdm));
    }
}
