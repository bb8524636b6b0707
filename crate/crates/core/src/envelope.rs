//! Analytic-signal computation and the envelope-power sequence fed to the
//! spectral stage.
//!
//! The analytic signal is built in the frequency domain: transform, zero
//! the negative-frequency half, double the positive half, transform back.
//! The imaginary part is the quadrature component; the squared magnitude
//! `x^2 + q^2` is the envelope power. For an amplitude-modulated tone the
//! envelope power tracks the squared modulation and no longer oscillates
//! at the carrier rate, which is what makes the spectral peak land on the
//! beat rate instead of the carrier.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// One frame of the analytic signal and its envelope power.
#[derive(Debug, Clone)]
pub struct AnalyticFrame {
    real_part: Vec<f64>,
    imag_part: Vec<f64>,
    envelope_power: Vec<f64>,
}

impl AnalyticFrame {
    /// The in-phase component; identical to the input samples.
    pub fn real_part(&self) -> &[f64] {
        &self.real_part
    }

    /// The quadrature component.
    pub fn imag_part(&self) -> &[f64] {
        &self.imag_part
    }

    /// `real^2 + imag^2` per sample.
    pub fn envelope_power(&self) -> &[f64] {
        &self.envelope_power
    }

    pub fn len(&self) -> usize {
        self.real_part.len()
    }

    pub fn is_empty(&self) -> bool {
        self.real_part.is_empty()
    }
}

/// Computes the discrete analytic signal of `x`.
///
/// The returned frame keeps `x` itself as the real part, so no round-trip
/// error is introduced on the in-phase component.
pub fn analytic_signal(x: &[f64]) -> Result<AnalyticFrame> {
    if x.len() < 2 {
        return Err(Error::Validation(format!(
            "analytic signal needs at least 2 samples, got {}",
            x.len()
        )));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::Validation(format!(
            "sample {i} is not finite ({})",
            x[i]
        )));
    }

    let n = x.len();
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);

    // One-sided spectrum doubling: keep DC (and Nyquist for even n),
    // double the positive frequencies, zero the negative ones.
    let half = n / 2;
    for (k, v) in buf.iter_mut().enumerate() {
        if k == 0 || (n % 2 == 0 && k == half) {
            // unchanged
        } else if k < half || (n % 2 == 1 && k == half) {
            *v *= 2.0;
        } else {
            *v = Complex64::new(0.0, 0.0);
        }
    }

    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    let imag_part: Vec<f64> = buf.iter().map(|c| c.im * scale).collect();
    let envelope_power: Vec<f64> = x
        .iter()
        .zip(&imag_part)
        .map(|(&re, &im)| re * re + im * im)
        .collect();

    Ok(AnalyticFrame {
        real_part: x.to_vec(),
        imag_part,
        envelope_power,
    })
}

/// Envelope power with its mean removed, ready for the frame FFT. Without
/// this step the DC bin would dwarf every cardiac line.
pub fn envelope_for_spectrum(frame: &AnalyticFrame) -> Vec<f64> {
    let p = frame.envelope_power();
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    p.iter().map(|v| v - mean).collect()
}
