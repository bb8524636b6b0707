//! Frame spectra, in-band peak picking, and phase-vocoder frequency
//! refinement.
//!
//! The coarse estimate `f_i` is the frequency of the largest magnitude bin
//! inside the search band. The refined estimate `f_r` resolves the coarse
//! bin's phase advance between consecutive frames into an absolute
//! frequency: candidates `(dphi/2pi + n) / hop` are enumerated over integer
//! cycle counts `n` and the one closest to `f_i` wins. For a stationary
//! tone this removes nearly all of the bin-quantization error.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::config::WindowFn;
use crate::error::{Error, Result};

/// Slack, in bins, when mapping band edges onto bin indices. Guards
/// against band edges that land on a bin center up to round-off.
const BIN_EDGE_TOLERANCE: f64 = 1e-9;

/// One-sided spectrum of a single envelope frame.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Complex bins for frequencies `0..=fft_length/2` times the spacing.
    pub bins: Vec<Complex64>,
    /// Frequency step between adjacent bins in Hz.
    pub bin_spacing_hz: f64,
    /// Transform length the bins came from.
    pub fft_length: usize,
    /// Start time of the frame within the recording, seconds.
    pub frame_time_s: f64,
}

impl Spectrum {
    /// Tags the spectrum with its frame start time.
    pub fn at_time(mut self, frame_time_s: f64) -> Self {
        self.frame_time_s = frame_time_s;
        self
    }

    /// Reads coarse-peak data (frequency, magnitude, phase) at one bin.
    pub fn peak_at(&self, bin_index: usize) -> PeakPick {
        let c = self.bins[bin_index];
        PeakPick {
            bin_index,
            f_i_hz: bin_index as f64 * self.bin_spacing_hz,
            amplitude: c.norm(),
            phase_rad: c.arg(),
        }
    }
}

/// The in-band spectral maximum of one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakPick {
    pub bin_index: usize,
    /// Coarse frequency: bin index times bin spacing.
    pub f_i_hz: f64,
    /// Raw transform magnitude at the peak bin.
    pub amplitude: f64,
    /// Phase of the peak bin in radians, range (-pi, pi].
    pub phase_rad: f64,
}

/// Outcome of the phase-vocoder refinement step.
#[derive(Debug, Clone, PartialEq)]
pub struct VocoderResult {
    /// Refined frequency in Hz.
    pub f_r_hz: f64,
    /// The integer cycle count the refinement settled on.
    pub chosen_n: i64,
    /// All candidate frequencies considered, ascending.
    pub candidates: Vec<f64>,
}

/// Windows `env`, zero-pads it, and returns the one-sided spectrum.
///
/// `pad_factor == 1` transforms the frame at its own length; larger factors
/// multiply the length and round up to a power of two.
pub fn frame_spectrum(
    env: &[f64],
    sample_rate_hz: f64,
    pad_factor: usize,
    window_fn: WindowFn,
) -> Result<Spectrum> {
    if env.len() < 2 {
        return Err(Error::Validation(format!(
            "spectrum needs at least 2 samples, got {}",
            env.len()
        )));
    }
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::Config(format!(
            "sample rate must be positive and finite, got {sample_rate_hz}"
        )));
    }
    if pad_factor == 0 {
        return Err(Error::Config("pad_factor must be at least 1".into()));
    }
    if let Some(i) = env.iter().position(|v| !v.is_finite()) {
        return Err(Error::Validation(format!(
            "envelope sample {i} is not finite ({})",
            env[i]
        )));
    }

    let len = env.len();
    let fft_length = if pad_factor == 1 {
        len
    } else {
        (pad_factor * len).next_power_of_two()
    };

    let mut buf = vec![Complex64::new(0.0, 0.0); fft_length];
    match window_fn {
        WindowFn::Rectangular => {
            for (slot, &v) in buf.iter_mut().zip(env) {
                *slot = Complex64::new(v, 0.0);
            }
        }
        WindowFn::Hann => {
            // Periodic form: full-period tones in the frame stay out of the
            // DC bin exactly, not just approximately.
            let step = std::f64::consts::TAU / len as f64;
            for (i, (slot, &v)) in buf.iter_mut().zip(env).enumerate() {
                let w = 0.5 * (1.0 - (step * i as f64).cos());
                *slot = Complex64::new(v * w, 0.0);
            }
        }
    }

    FftPlanner::new().plan_fft_forward(fft_length).process(&mut buf);
    buf.truncate(fft_length / 2 + 1);

    Ok(Spectrum {
        bins: buf,
        bin_spacing_hz: sample_rate_hz / fft_length as f64,
        fft_length,
        frame_time_s: 0.0,
    })
}

/// Largest-magnitude bin with center frequency inside `[low_hz, high_hz]`.
/// Ties go to the lower frequency.
pub fn peak_pick(spectrum: &Spectrum, low_hz: f64, high_hz: f64) -> Result<PeakPick> {
    if !(low_hz.is_finite() && high_hz.is_finite() && low_hz >= 0.0 && low_hz < high_hz) {
        return Err(Error::Config(format!(
            "search band must satisfy 0 <= low < high, got ({low_hz}, {high_hz})"
        )));
    }
    let delta = spectrum.bin_spacing_hz;
    let lo = (low_hz / delta - BIN_EDGE_TOLERANCE).ceil().max(0.0) as usize;
    let hi_raw = (high_hz / delta + BIN_EDGE_TOLERANCE).floor();
    if hi_raw < lo as f64 {
        return Err(Error::EmptyBand {
            low_hz,
            high_hz,
        });
    }
    let hi = (hi_raw as usize).min(spectrum.bins.len() - 1);
    if lo > hi {
        return Err(Error::EmptyBand { low_hz, high_hz });
    }

    let mut best = lo;
    let mut best_mag = spectrum.bins[lo].norm();
    for k in lo + 1..=hi {
        let mag = spectrum.bins[k].norm();
        if mag > best_mag {
            best = k;
            best_mag = mag;
        }
    }
    Ok(spectrum.peak_at(best))
}

/// Refines the coarse peak using the phase advance between two frames
/// spaced `hop_s` apart. Both picks must refer to the same bin.
///
/// The refined value stays within half a candidate step, `1/(2 hop_s)` Hz,
/// of the coarse frequency. With no candidate in range (possible only for
/// coarse frequencies near zero) the coarse value is returned unchanged.
pub fn vocoder_refine(prev: &PeakPick, cur: &PeakPick, hop_s: f64) -> Result<VocoderResult> {
    if !(hop_s.is_finite() && hop_s > 0.0) {
        return Err(Error::Config(format!(
            "hop must be positive and finite, got {hop_s}"
        )));
    }
    if prev.bin_index != cur.bin_index {
        return Err(Error::Validation(format!(
            "phase comparison needs matching bins, got {} and {}",
            prev.bin_index, cur.bin_index
        )));
    }

    // Fractional cycle advance in (-1, 1).
    let base = (cur.phase_rad - prev.phase_rad) / std::f64::consts::TAU;
    let f_i = cur.f_i_hz;

    let n_lo = (hop_s * f_i - 1.0 - base - 1e-9).ceil().max(0.0) as i64;
    let n_hi = (hop_s * f_i + 1.0 - base + 1e-9).floor() as i64;

    let mut candidates = Vec::new();
    let mut chosen_n = 0i64;
    let mut f_r = f_i;
    let mut best_dist = f64::INFINITY;
    for n in n_lo..=n_hi {
        let f = (base + n as f64) / hop_s;
        candidates.push(f);
        let dist = (f - f_i).abs();
        if dist < best_dist {
            best_dist = dist;
            chosen_n = n;
            f_r = f;
        }
    }

    Ok(VocoderResult {
        f_r_hz: f_r,
        chosen_n,
        candidates,
    })
}
