//! Impact kinematics: ingestion, resampling, differentiation and the derived
//! kinematic set (linear acceleration, angular velocity, angular acceleration,
//! angular jerk, each with three components and a resultant).
//!
//! Axes follow the head anatomical frame: X posterior-to-anterior,
//! Y left-to-right, Z superior-to-inferior. Linear acceleration is in m/s²
//! at the brain center of gravity, angular velocity in rad/s.

mod filter;
mod io;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use filter::{butterworth_lowpass_zero_phase, Biquad};
pub use io::{load_dataset, read_signal_file, write_signal_file};

/// Canonical uniform sample rate (Nyquist at 500 Hz).
pub const DEFAULT_SAMPLE_RATE: f64 = 1000.0;

/// Standard gravity, used by criteria expressed in g.
pub const STANDARD_GRAVITY: f64 = 9.80665;

/// Minimum number of samples an ingested recording must carry.
pub const MIN_INGEST_SAMPLES: usize = 8;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("missing file: {0}")]
    MissingFile(PathBuf),
    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("non-finite sample at row {row}, column {column}")]
    NonFiniteSample { row: usize, column: String },
    #[error("time is not strictly increasing at sample {0}")]
    NonMonotonicTime(usize),
    #[error("too few samples: need {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("series lengths disagree: {0}")]
    LengthMismatch(String),
    #[error("sampling is not uniform (sample {0} off-grid)")]
    NonUniformSampling(usize),
    #[error("invalid sample rate {0}")]
    InvalidRate(f64),
    #[error("in {path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<SignalError>,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SignalError {
    /// The innermost error, stripping file-context wrappers.
    pub fn root(&self) -> &SignalError {
        match self {
            SignalError::InFile { source, .. } => source.root(),
            other => other,
        }
    }

    fn in_file(self, path: impl Into<PathBuf>) -> SignalError {
        SignalError::InFile { path: path.into(), source: Box::new(self) }
    }
}

/// Impact source (the human-defined impact type).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    Hm,
    Cf,
    Mma,
    Nascar,
    Other(String),
}

impl Source {
    pub const KNOWN: [Source; 4] = [Source::Hm, Source::Cf, Source::Mma, Source::Nascar];

    pub fn as_str(&self) -> &str {
        match self {
            Source::Hm => "HM",
            Source::Cf => "CF",
            Source::Mma => "MMA",
            Source::Nascar => "NASCAR",
            Source::Other(s) => s,
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err("empty source label".into());
        }
        Ok(match s.to_ascii_uppercase().as_str() {
            "HM" => Source::Hm,
            "CF" => Source::Cf,
            "MMA" => Source::Mma,
            "NASCAR" => Source::Nascar,
            _ => Source::Other(s.to_string()),
        })
    }
}

impl Serialize for Source {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Source {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Three component series sharing one time base.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Axes3 {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl Axes3 {
    pub fn new(x: Vec<f64>, y: Vec<f64>, z: Vec<f64>) -> Self {
        Axes3 { x, y, z }
    }

    pub fn zeros(n: usize) -> Self {
        Axes3 { x: vec![0.0; n], y: vec![0.0; n], z: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn components(&self) -> [&[f64]; 3] {
        [&self.x, &self.y, &self.z]
    }

    fn map(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Axes3 {
        Axes3 { x: f(&self.x), y: f(&self.y), z: f(&self.z) }
    }

    fn try_map<E>(&self, mut f: impl FnMut(&[f64]) -> Result<Vec<f64>, E>) -> Result<Axes3, E> {
        Ok(Axes3 { x: f(&self.x)?, y: f(&self.y)?, z: f(&self.z)? })
    }
}

/// One raw impact: 6-axis kinematics plus labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpactRecording {
    pub impact_id: String,
    pub source: Source,
    /// Seconds, strictly increasing.
    pub t: Vec<f64>,
    /// m/s² at the brain center of gravity.
    pub lin_acc: Axes3,
    /// rad/s.
    pub ang_vel: Axes3,
    /// Cumulative strain damage fraction, when labeled.
    pub csdm: Option<f64>,
}

impl ImpactRecording {
    /// Builds a recording, checking shape, finiteness and time monotonicity.
    /// Requires at least two samples; ingestion applies the stricter
    /// [`MIN_INGEST_SAMPLES`] bound.
    pub fn new(
        impact_id: impl Into<String>,
        source: Source,
        t: Vec<f64>,
        lin_acc: Axes3,
        ang_vel: Axes3,
        csdm: Option<f64>,
    ) -> Result<Self, SignalError> {
        let rec = ImpactRecording { impact_id: impact_id.into(), source, t, lin_acc, ang_vel, csdm };
        rec.validate(2)?;
        Ok(rec)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub(crate) fn validate(&self, min_len: usize) -> Result<(), SignalError> {
        let n = self.t.len();
        if n < min_len {
            return Err(SignalError::TooFewSamples { needed: min_len, got: n });
        }
        let series: [(&str, &[f64]); 7] = [
            ("t", &self.t),
            ("ax", &self.lin_acc.x),
            ("ay", &self.lin_acc.y),
            ("az", &self.lin_acc.z),
            ("wx", &self.ang_vel.x),
            ("wy", &self.ang_vel.y),
            ("wz", &self.ang_vel.z),
        ];
        for (name, s) in series {
            if s.len() != n {
                return Err(SignalError::LengthMismatch(format!("{name} has {} samples, t has {n}", s.len())));
            }
            if let Some(row) = s.iter().position(|v| !v.is_finite()) {
                return Err(SignalError::NonFiniteSample { row, column: name.to_string() });
            }
        }
        if let Some(i) = (1..n).find(|&i| self.t[i] <= self.t[i - 1]) {
            return Err(SignalError::NonMonotonicTime(i));
        }
        if let Some(c) = self.csdm {
            if !(0.0..=1.0).contains(&c) {
                return Err(SignalError::MalformedRow { row: 0, reason: format!("csdm {c} outside [0, 1]") });
            }
        }
        Ok(())
    }

    /// Sample rate if the time base is uniform.
    pub fn uniform_rate(&self) -> Result<f64, SignalError> {
        uniform_rate(&self.t)
    }
}

fn uniform_rate(t: &[f64]) -> Result<f64, SignalError> {
    let n = t.len();
    if n < 2 {
        return Err(SignalError::TooFewSamples { needed: 2, got: n });
    }
    let dt = (t[n - 1] - t[0]) / (n - 1) as f64;
    if !(dt > 0.0) {
        return Err(SignalError::NonMonotonicTime(1));
    }
    let tol = 1e-6 * dt;
    if let Some(i) = (0..n).find(|&i| (t[i] - (t[0] + i as f64 * dt)).abs() > tol) {
        return Err(SignalError::NonUniformSampling(i));
    }
    Ok(1.0 / dt)
}

fn is_uniform_at(t: &[f64], rate: f64) -> bool {
    let dt = 1.0 / rate;
    let tol = 1e-9 * dt;
    t.iter().enumerate().all(|(i, &ti)| (ti - (t[0] + i as f64 * dt)).abs() <= tol)
}

/// Linear-interpolation resampling onto a uniform grid `t0 + k / rate` that
/// spans `[t0, t_end]`. The first sample is preserved exactly; the grid stops
/// at the last point not beyond `t_end`. A recording already uniform at the
/// target rate is returned unchanged.
pub fn resample(rec: &ImpactRecording, target_rate: f64) -> Result<ImpactRecording, SignalError> {
    if !(target_rate > 0.0) || !target_rate.is_finite() {
        return Err(SignalError::InvalidRate(target_rate));
    }
    let n = rec.t.len();
    if n < 2 {
        return Err(SignalError::TooFewSamples { needed: 2, got: n });
    }
    if is_uniform_at(&rec.t, target_rate) {
        return Ok(rec.clone());
    }
    let t0 = rec.t[0];
    let t_end = rec.t[n - 1];
    let span = (t_end - t0) * target_rate;
    let m = (span + 1e-9).floor() as usize + 1;
    let grid: Vec<f64> = (0..m).map(|k| t0 + k as f64 / target_rate).collect();

    // (segment index, weight on the right sample) for each grid point
    let mut weights = Vec::with_capacity(m);
    let mut seg = 0usize;
    for &g in &grid {
        while seg + 2 < n && rec.t[seg + 1] < g {
            seg += 1;
        }
        let (ta, tb) = (rec.t[seg], rec.t[seg + 1]);
        let w = ((g - ta) / (tb - ta)).clamp(0.0, 1.0);
        weights.push((seg, w));
    }
    let interp = |s: &[f64]| -> Vec<f64> {
        weights
            .iter()
            .map(|&(i, w)| if w == 0.0 { s[i] } else if w == 1.0 { s[i + 1] } else { s[i] + w * (s[i + 1] - s[i]) })
            .collect()
    };
    Ok(ImpactRecording {
        impact_id: rec.impact_id.clone(),
        source: rec.source.clone(),
        t: grid,
        lin_acc: rec.lin_acc.map(interp),
        ang_vel: rec.ang_vel.map(interp),
        csdm: rec.csdm,
    })
}

/// Time derivative of a uniformly sampled series: central differences in the
/// interior, first-order one-sided differences at the two endpoints.
pub fn differentiate(series: &[f64], rate: f64) -> Result<Vec<f64>, SignalError> {
    let n = series.len();
    if n < 3 {
        return Err(SignalError::TooFewSamples { needed: 3, got: n });
    }
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(SignalError::InvalidRate(rate));
    }
    let mut out = Vec::with_capacity(n);
    out.push((series[1] - series[0]) * rate);
    for i in 1..n - 1 {
        out.push((series[i + 1] - series[i - 1]) * (0.5 * rate));
    }
    out.push((series[n - 1] - series[n - 2]) * rate);
    Ok(out)
}

/// Pointwise Euclidean magnitude of three components.
pub fn resultant(axes: &Axes3) -> Vec<f64> {
    axes.x
        .iter()
        .zip(&axes.y)
        .zip(&axes.z)
        .map(|((&x, &y), &z)| (x * x + y * y + z * z).sqrt())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KinematicType {
    LinAcc,
    AngVel,
    AngAcc,
    AngJerk,
}

impl KinematicType {
    pub const ALL: [KinematicType; 4] =
        [KinematicType::LinAcc, KinematicType::AngVel, KinematicType::AngAcc, KinematicType::AngJerk];

    pub fn key(self) -> &'static str {
        match self {
            KinematicType::LinAcc => "lin_acc",
            KinematicType::AngVel => "ang_vel",
            KinematicType::AngAcc => "ang_acc",
            KinematicType::AngJerk => "ang_jerk",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    X,
    Y,
    Z,
    Resultant,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::X, Channel::Y, Channel::Z, Channel::Resultant];

    pub fn key(self) -> &'static str {
        match self {
            Channel::X => "x",
            Channel::Y => "y",
            Channel::Z => "z",
            Channel::Resultant => "res",
        }
    }
}

/// Components plus resultant of one kinematic type.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub axes: Axes3,
    pub resultant: Vec<f64>,
}

impl ChannelSet {
    pub fn from_axes(axes: Axes3) -> Self {
        let resultant = resultant(&axes);
        ChannelSet { axes, resultant }
    }

    pub fn channel(&self, ch: Channel) -> &[f64] {
        match ch {
            Channel::X => &self.axes.x,
            Channel::Y => &self.axes.y,
            Channel::Z => &self.axes.z,
            Channel::Resultant => &self.resultant,
        }
    }

    pub fn len(&self) -> usize {
        self.resultant.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resultant.is_empty()
    }
}

/// The four kinematic types on a shared uniform time base.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicsSet {
    pub sample_rate: f64,
    pub lin_acc: ChannelSet,
    pub ang_vel: ChannelSet,
    pub ang_acc: ChannelSet,
    pub ang_jerk: ChannelSet,
}

impl KinematicsSet {
    pub fn get(&self, kind: KinematicType) -> &ChannelSet {
        match kind {
            KinematicType::LinAcc => &self.lin_acc,
            KinematicType::AngVel => &self.ang_vel,
            KinematicType::AngAcc => &self.ang_acc,
            KinematicType::AngJerk => &self.ang_jerk,
        }
    }

    pub fn len(&self) -> usize {
        self.lin_acc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lin_acc.is_empty()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KinematicsOptions {
    /// Cutoff of the optional zero-phase 4th-order Butterworth low-pass
    /// applied to the measured channels before differentiation. Off by default.
    #[serde(default)]
    pub lowpass_hz: Option<f64>,
}

/// Derives the kinematic set with default options (no filtering).
pub fn derive_kinematics(rec: &ImpactRecording) -> Result<KinematicsSet, SignalError> {
    derive_kinematics_with(rec, &KinematicsOptions::default())
}

/// Angular acceleration and jerk always come from differentiating angular
/// velocity; resultants are taken from the components.
pub fn derive_kinematics_with(
    rec: &ImpactRecording,
    opts: &KinematicsOptions,
) -> Result<KinematicsSet, SignalError> {
    let rate = rec.uniform_rate()?;
    let (lin_acc, ang_vel) = match opts.lowpass_hz {
        Some(fc) => {
            let lp = |s: &[f64]| butterworth_lowpass_zero_phase(s, fc, rate);
            (rec.lin_acc.try_map(lp)?, rec.ang_vel.try_map(lp)?)
        }
        None => (rec.lin_acc.clone(), rec.ang_vel.clone()),
    };
    let ang_acc = ang_vel.try_map(|s| differentiate(s, rate))?;
    let ang_jerk = ang_acc.try_map(|s| differentiate(s, rate))?;
    Ok(KinematicsSet {
        sample_rate: rate,
        lin_acc: ChannelSet::from_axes(lin_acc),
        ang_vel: ChannelSet::from_axes(ang_vel),
        ang_acc: ChannelSet::from_axes(ang_acc),
        ang_jerk: ChannelSet::from_axes(ang_jerk),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid(n: usize, rate: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 / rate).collect()
    }

    fn rec_from(t: Vec<f64>, lin: Axes3, ang: Axes3) -> ImpactRecording {
        ImpactRecording::new("r", Source::Hm, t, lin, ang, None).unwrap()
    }

    #[test]
    fn resample_identity_is_bitwise() {
        let t = grid(50, 1000.0);
        let x: Vec<f64> = t.iter().map(|v| (v * 37.0).sin()).collect();
        let rec = rec_from(t, Axes3::new(x.clone(), x.clone(), x.clone()), Axes3::zeros(50));
        let out = resample(&rec, 1000.0).unwrap();
        assert_eq!(out, rec);
    }

    #[test]
    fn resample_linear_ramp_is_exact() {
        let t = grid(51, 500.0); // [0, 0.1]
        let ramp = t.clone();
        let rec = rec_from(t, Axes3::new(ramp.clone(), ramp.clone(), ramp), Axes3::zeros(51));
        let out = resample(&rec, 1000.0).unwrap();
        assert_eq!(out.t.len(), 101);
        assert_eq!(out.t[0], 0.0);
        for (ti, ax) in out.t.iter().zip(&out.lin_acc.x) {
            assert!((ti - ax).abs() < 1e-12);
        }
        assert!((out.t[100] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn resample_two_points_matches_line() {
        let t = vec![0.0, 0.0105];
        let a = Axes3::new(vec![1.0, 3.1], vec![0.0, 0.0], vec![-2.0, 2.0]);
        let rec = rec_from(t, a, Axes3::zeros(2));
        let out = resample(&rec, 1000.0).unwrap();
        assert_eq!(out.t.len(), 11);
        for (ti, ax) in out.t.iter().zip(&out.lin_acc.x) {
            let line = 1.0 + (3.1 - 1.0) * ti / 0.0105;
            assert!((ax - line).abs() < 1e-12);
        }
    }

    #[test]
    fn resample_rejects_bad_input() {
        let rec = rec_from(vec![0.0, 0.001], Axes3::zeros(2), Axes3::zeros(2));
        assert!(matches!(resample(&rec, 0.0), Err(SignalError::InvalidRate(_))));
        let mut short = rec.clone();
        short.t.truncate(1);
        assert!(matches!(resample(&short, 1000.0), Err(SignalError::TooFewSamples { .. })));
    }

    #[test]
    fn differentiate_linear_and_constant() {
        let t = grid(100, 1000.0);
        let w: Vec<f64> = t.iter().map(|v| 5.0 * v).collect();
        let d = differentiate(&w, 1000.0).unwrap();
        assert_eq!(d.len(), w.len());
        assert!(d.iter().all(|v| (v - 5.0).abs() < 1e-9));
        let c = differentiate(&[2.5; 10], 1000.0).unwrap();
        assert!(c.iter().all(|&v| v == 0.0));
        assert!(matches!(differentiate(&[1.0, 2.0], 1000.0), Err(SignalError::TooFewSamples { .. })));
    }

    #[test]
    fn differentiate_sinusoid_against_analytic() {
        let f = 20.0;
        let t = grid(101, 1000.0); // two full periods, endpoints at zero crossings
        let w: Vec<f64> = t.iter().map(|v| (2.0 * PI * f * v).sin()).collect();
        let d = differentiate(&w, 1000.0).unwrap();
        let amp = 2.0 * PI * f;
        let worst = t
            .iter()
            .zip(&d)
            .map(|(ti, di)| (di - amp * (2.0 * PI * f * ti).cos()).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.005 * amp, "worst error {worst}");
    }

    #[test]
    fn kinematics_constant_omega() {
        let n = 20;
        let ang = Axes3::new(vec![3.0; n], vec![4.0; n], vec![0.0; n]);
        let rec = rec_from(grid(n, 1000.0), Axes3::zeros(n), ang);
        let k = derive_kinematics(&rec).unwrap();
        assert!(k.ang_vel.resultant.iter().all(|&v| v == 5.0));
        assert!(k.ang_acc.resultant.iter().all(|&v| v == 0.0));
        assert!(k.ang_jerk.resultant.iter().all(|&v| v == 0.0));
        assert!((k.sample_rate - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn kinematics_ramp_omega_z() {
        let n = 30;
        let t = grid(n, 1000.0);
        let wz: Vec<f64> = t.iter().map(|v| 100.0 * v).collect();
        let rec = rec_from(t, Axes3::zeros(n), Axes3::new(vec![0.0; n], vec![0.0; n], wz));
        let k = derive_kinematics(&rec).unwrap();
        assert!(k.ang_acc.axes.z.iter().all(|v| (v - 100.0).abs() < 1e-9));
        assert!(k.ang_acc.resultant.iter().all(|v| (v - 100.0).abs() < 1e-9));
    }

    #[test]
    fn jerk_matches_second_derivative_mid_signal() {
        let f = 15.0;
        let n = 201;
        let t = grid(n, 1000.0);
        let w: Vec<f64> = t.iter().map(|v| (2.0 * PI * f * v).sin()).collect();
        let rec = rec_from(t.clone(), Axes3::zeros(n), Axes3::new(w, vec![0.0; n], vec![0.0; n]));
        let k = derive_kinematics(&rec).unwrap();
        let amp = (2.0 * PI * f).powi(2);
        for i in 20..n - 20 {
            let truth = -amp * (2.0 * PI * f * t[i]).sin();
            assert!((k.ang_jerk.axes.x[i] - truth).abs() < 0.01 * amp);
        }
    }

    #[test]
    fn non_uniform_time_is_rejected_by_derive() {
        let mut t = grid(10, 1000.0);
        t[4] += 0.0004;
        let rec = rec_from(t, Axes3::zeros(10), Axes3::zeros(10));
        assert!(matches!(derive_kinematics(&rec), Err(SignalError::NonUniformSampling(4))));
    }

    #[test]
    fn recording_validation() {
        let bad_t = vec![0.0, 0.001, 0.002, 0.001];
        let r = ImpactRecording::new("a", Source::Cf, bad_t, Axes3::zeros(4), Axes3::zeros(4), None);
        assert!(matches!(r, Err(SignalError::NonMonotonicTime(3))));
        let mut ax = Axes3::zeros(3);
        ax.y[1] = f64::NAN;
        let r = ImpactRecording::new("a", Source::Cf, grid(3, 1e3), ax, Axes3::zeros(3), None);
        assert!(matches!(r, Err(SignalError::NonFiniteSample { row: 1, .. })));
    }

    #[test]
    fn source_round_trip() {
        for s in ["HM", "CF", "MMA", "NASCAR", "SYNTH-A"] {
            let src: Source = s.parse().unwrap();
            assert_eq!(src.to_string(), s);
        }
        assert_eq!("nascar".parse::<Source>().unwrap(), Source::Nascar);
    }

    fn arb_series() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1e3..1e3f64, 3..64)
    }

    proptest! {
        #[test]
        fn differentiation_is_linear(f in arb_series(), a in -10.0..10.0f64, b in -10.0..10.0f64, seed in any::<u64>()) {
            let g: Vec<f64> = f.iter().enumerate().map(|(i, v)| (v * 0.37 + (seed % 97) as f64 + i as f64).cos() * 50.0).collect();
            let combo: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
            let lhs = differentiate(&combo, 1000.0).unwrap();
            let df = differentiate(&f, 1000.0).unwrap();
            let dg = differentiate(&g, 1000.0).unwrap();
            for i in 0..lhs.len() {
                let rhs = a * df[i] + b * dg[i];
                let scale = 1.0 + rhs.abs().max(lhs[i].abs());
                prop_assert!((lhs[i] - rhs).abs() <= 1e-12 * scale * 1e3);
            }
        }

        #[test]
        fn resultant_dominates_components(x in arb_series(), seed in any::<u32>()) {
            let n = x.len();
            let y: Vec<f64> = (0..n).map(|i| ((i as f64 + seed as f64) * 1.3).sin() * 300.0).collect();
            let z: Vec<f64> = (0..n).map(|i| ((i as f64 * 0.7) + 2.0).cos() * 80.0).collect();
            let t = grid(n, 1000.0);
            let rec = rec_from(t, Axes3::new(x, y.clone(), z.clone()), Axes3::new(y, z, vec![1.0; n]));
            let k = derive_kinematics(&rec).unwrap();
            let k2 = derive_kinematics(&rec).unwrap();
            prop_assert_eq!(&k, &k2);
            for kind in KinematicType::ALL {
                let cs = k.get(kind);
                for i in 0..n {
                    let m = cs.axes.x[i].abs().max(cs.axes.y[i].abs()).max(cs.axes.z[i].abs());
                    prop_assert!(cs.resultant[i] >= m);
                }
            }
        }

        #[test]
        fn resample_is_idempotent(n in 8usize..80, rate in prop::sample::select(vec![500.0, 800.0, 1000.0, 2000.0])) {
            let t: Vec<f64> = (0..n).map(|i| i as f64 * 0.0013).collect();
            let s: Vec<f64> = t.iter().map(|v| (v * 91.0).sin()).collect();
            let rec = rec_from(t, Axes3::new(s.clone(), s.clone(), s.clone()), Axes3::new(s.clone(), s.clone(), s));
            if let Ok(once) = resample(&rec, rate) {
                if once.len() >= 2 {
                    let twice = resample(&once, rate).unwrap();
                    prop_assert_eq!(once, twice);
                }
            }
        }
    }
}
