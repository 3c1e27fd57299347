//! Mean spectral density over fixed frequency windows.
//!
//! The periodogram is one-sided, computed on the signal zero-padded to the
//! next power of two at or above `max(256, len)`, with a rectangular window.
//! Scaling is such that `Σ psd[k] · Δf` equals the mean square of the
//! unpadded signal; DC and Nyquist bins are not doubled.

use std::sync::OnceLock;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::FeatureError;
use crate::signal::{Channel, KinematicType, KinematicsSet};

pub const MIN_FFT_LEN: usize = 256;

/// Half-open frequency interval `[lo, hi)`; the last window also includes `hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub lo_hz: f64,
    pub hi_hz: f64,
    pub closed: bool,
}

impl Window {
    pub fn contains(&self, f: f64) -> bool {
        f >= self.lo_hz && (f < self.hi_hz || (self.closed && f == self.hi_hz))
    }

    pub fn width(&self) -> f64 {
        self.hi_hz - self.lo_hz
    }
}

/// Fifteen 20 Hz windows over [0, 300) then four 50 Hz windows up to 500 Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyWindows(Vec<Window>);

impl FrequencyWindows {
    pub fn standard() -> &'static FrequencyWindows {
        static W: OnceLock<FrequencyWindows> = OnceLock::new();
        W.get_or_init(|| {
            let mut v: Vec<Window> = (0..15)
                .map(|i| Window { lo_hz: 20.0 * i as f64, hi_hz: 20.0 * (i + 1) as f64, closed: false })
                .collect();
            v.extend((0..4).map(|i| Window {
                lo_hz: 300.0 + 50.0 * i as f64,
                hi_hz: 350.0 + 50.0 * i as f64,
                closed: i == 3,
            }));
            FrequencyWindows(v)
        })
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Window> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn fft_len(n: usize) -> usize {
    n.max(MIN_FFT_LEN).next_power_of_two()
}

/// One-sided periodogram: returns `(frequencies, psd)` with `nfft/2 + 1` bins.
pub fn periodogram(x: &[f64], rate: f64) -> (Vec<f64>, Vec<f64>) {
    let mut planner = FftPlanner::new();
    periodogram_with(&mut planner, x, rate)
}

fn periodogram_with(planner: &mut FftPlanner<f64>, x: &[f64], rate: f64) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let nfft = fft_len(n);
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    buf.resize(nfft, Complex::new(0.0, 0.0));
    planner.plan_fft_forward(nfft).process(&mut buf);
    let scale = 1.0 / (rate * n as f64);
    let half = nfft / 2;
    let df = rate / nfft as f64;
    let freqs = (0..=half).map(|k| k as f64 * df).collect();
    let psd = (0..=half)
        .map(|k| {
            let p = buf[k].norm_sqr() * scale;
            if k == 0 || k == half {
                p
            } else {
                2.0 * p
            }
        })
        .collect();
    (freqs, psd)
}

/// Mean PSD of the bins whose center frequency falls in each window.
pub fn window_means(freqs: &[f64], psd: &[f64], windows: &FrequencyWindows) -> Result<Vec<f64>, FeatureError> {
    windows
        .iter()
        .map(|w| {
            let (sum, count) = freqs
                .iter()
                .zip(psd)
                .filter(|(f, _)| w.contains(**f))
                .fold((0.0, 0usize), |(s, c), (_, p)| (s + p, c + 1));
            if count == 0 {
                Err(FeatureError::EmptyWindow { lo_hz: w.lo_hz, hi_hz: w.hi_hz })
            } else {
                Ok(sum / count as f64)
            }
        })
        .collect()
}

/// 304 spectral features: type-major, then channel (x, y, z, resultant), then window.
pub fn spectral_features(kin: &KinematicsSet) -> Result<Vec<f64>, FeatureError> {
    if kin.is_empty() {
        return Err(FeatureError::EmptySignal);
    }
    if !(kin.sample_rate > 0.0) || !kin.sample_rate.is_finite() {
        return Err(FeatureError::NonUniformSampling);
    }
    let windows = FrequencyWindows::standard();
    let mut planner = FftPlanner::new();
    let mut out = Vec::with_capacity(KinematicType::ALL.len() * Channel::ALL.len() * windows.len());
    for kind in KinematicType::ALL {
        let cs = kin.get(kind);
        for ch in Channel::ALL {
            let (freqs, psd) = periodogram_with(&mut planner, cs.channel(ch), kin.sample_rate);
            out.extend(window_means(&freqs, &psd, windows)?);
        }
    }
    Ok(out)
}
