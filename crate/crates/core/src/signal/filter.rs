use std::f64::consts::PI;

use super::SignalError;

/// Second-order IIR section, direct form I.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    /// Bilinear-transform low-pass section with prewarped cutoff.
    pub fn lowpass(cutoff_hz: f64, rate: f64, q: f64) -> Self {
        let k = (PI * cutoff_hz / rate).tan();
        let norm = 1.0 / (1.0 + k / q + k * k);
        let b0 = k * k * norm;
        Biquad { b: [b0, 2.0 * b0, b0], a: [2.0 * (k * k - 1.0) * norm, (1.0 - k / q + k * k) * norm] }
    }

    pub fn run(&self, x: &[f64]) -> Vec<f64> {
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        // start from the steady state for a constant input equal to x[0]
        if let Some(&x0) = x.first() {
            x1 = x0;
            x2 = x0;
            y1 = x0;
            y2 = x0;
        }
        x.iter()
            .map(|&xi| {
                let yi = self.b[0] * xi + self.b[1] * x1 + self.b[2] * x2 - self.a[0] * y1 - self.a[1] * y2;
                x2 = x1;
                x1 = xi;
                y2 = y1;
                y1 = yi;
                yi
            })
            .collect()
    }
}

/// 4th-order Butterworth low-pass run forward then backward (zero phase).
pub fn butterworth_lowpass_zero_phase(x: &[f64], cutoff_hz: f64, rate: f64) -> Result<Vec<f64>, SignalError> {
    if !(cutoff_hz > 0.0 && cutoff_hz < 0.5 * rate) {
        return Err(SignalError::InvalidRate(cutoff_hz));
    }
    // pole-pair quality factors of the 4th-order prototype
    let sections = [
        Biquad::lowpass(cutoff_hz, rate, 1.0 / (2.0 * (PI / 8.0).cos())),
        Biquad::lowpass(cutoff_hz, rate, 1.0 / (2.0 * (3.0 * PI / 8.0).cos())),
    ];
    let mut y = x.to_vec();
    for s in &sections {
        y = s.run(&y);
    }
    y.reverse();
    for s in &sections {
        y = s.run(&y);
    }
    y.reverse();
    Ok(y)
}
