//! Frame segmentation, continuity-banded peak tracking, and the estimates
//! file formats.
//!
//! Per frame the pipeline is: band-pass the whole recording once, slice a
//! window, take the analytic envelope power, remove its mean, transform,
//! pick the in-band peak, then refine the peak frequency from the phase
//! advance since the previous frame. After the first frame the search band
//! is re-centered on the previous heart rate and widened by the continuity
//! limit in each direction.

use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{format_f64, PipelineConfig};
use crate::envelope::{analytic_signal, envelope_for_spectrum};
use crate::error::{Error, Result};
use crate::filter::{design_bandpass, filtfilt};
use crate::io::Recording;
use crate::spectrum::{frame_spectrum, peak_pick, vocoder_refine, Spectrum};

/// Peak magnitudes at or below this fraction of the frame's raw signal
/// energy count as numerically empty. Both quantities grow with the square
/// of the input amplitude, so the test is amplitude-scale-free. The value
/// splits the two populations by orders of magnitude: frames whose only
/// content is filter leakage or edge transients from out-of-band input
/// measure below 1e-7, while frames with genuine in-band modulation
/// measure above 1e-3 even when buried in noise.
const DEGENERATE_RATIO: f64 = 1e-6;

/// Why a frame's estimate looks the way it does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameFlag {
    /// Normal pick inside the continuity band.
    Ok,
    /// Frame was numerically empty; the previous estimate was carried over.
    Held,
    /// First frame was numerically empty; its coarse pick is reported as-is.
    Degenerate,
    /// Continuity band contained no bins; the global band was used instead.
    BandFallback,
}

impl std::fmt::Display for FrameFlag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FrameFlag::Ok => "ok",
            FrameFlag::Held => "held",
            FrameFlag::Degenerate => "degenerate",
            FrameFlag::BandFallback => "band_fallback",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for FrameFlag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ok" => Ok(FrameFlag::Ok),
            "held" => Ok(FrameFlag::Held),
            "degenerate" => Ok(FrameFlag::Degenerate),
            "band_fallback" => Ok(FrameFlag::BandFallback),
            other => Err(Error::Validation(format!("unknown frame flag \"{other}\""))),
        }
    }
}

/// One frame's heart-rate estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HrEstimate {
    pub frame_index: usize,
    /// Frame start within the recording, seconds.
    pub frame_start_s: f64,
    /// Coarse spectral peak frequency, Hz.
    pub f_i_hz: f64,
    /// Vocoder-refined frequency, Hz.
    pub f_r_hz: f64,
    /// `60 * f_r_hz`.
    pub hr_bpm: f64,
    /// Search band actually applied to this frame, Hz.
    pub search_band_hz: (f64, f64),
    pub flag: FrameFlag,
}

/// Splits a recording into analysis windows.
///
/// Sample counts are `round(seconds * rate)`; every returned range is a
/// full window, so a trailing partial window is dropped.
pub fn frames(recording: &Recording, window_s: f64, hop_s: f64) -> Result<Vec<Range<usize>>> {
    let fs = recording.sample_rate_hz();
    if !(window_s.is_finite() && window_s > 0.0 && hop_s.is_finite() && hop_s > 0.0) {
        return Err(Error::Config(format!(
            "window_s and hop_s must be positive, got ({window_s}, {hop_s})"
        )));
    }
    let window_len = (window_s * fs).round() as usize;
    let hop_len = (hop_s * fs).round() as usize;
    if window_len < 2 {
        return Err(Error::Config(format!(
            "window of {window_s} s is under 2 samples at {fs} Hz"
        )));
    }
    if hop_len < 1 {
        return Err(Error::Config(format!(
            "hop of {hop_s} s is under 1 sample at {fs} Hz"
        )));
    }
    if window_len > recording.len() {
        return Err(Error::Validation(format!(
            "recording of {} samples is shorter than one {window_len}-sample window",
            recording.len()
        )));
    }
    let mut out = Vec::new();
    let mut start = 0usize;
    while start + window_len <= recording.len() {
        out.push(start..start + window_len);
        start += hop_len;
    }
    Ok(out)
}

/// Search band for the next frame: previous HR plus/minus the continuity
/// limit, intersected with the global band. A previous value outside the
/// global band is clamped into it first so the intersection cannot vanish.
pub fn next_search_band(
    prev_hr_bpm: f64,
    continuity_bpm: f64,
    global_band_hz: (f64, f64),
) -> (f64, f64) {
    let (lo_bpm, hi_bpm) = (global_band_hz.0 * 60.0, global_band_hz.1 * 60.0);
    let prev = prev_hr_bpm.clamp(lo_bpm, hi_bpm);
    (
        (prev - continuity_bpm).max(lo_bpm) / 60.0,
        (prev + continuity_bpm).min(hi_bpm) / 60.0,
    )
}

/// Everything a detailed pipeline run can return. Envelopes are the
/// mean-removed per-frame sequences that were transformed; spectra carry
/// their frame start times.
#[derive(Debug)]
pub struct EstimateRun {
    pub estimates: Vec<HrEstimate>,
    pub envelopes: Option<Vec<Vec<f64>>>,
    pub spectra: Option<Vec<Spectrum>>,
}

/// Runs the full pipeline and returns one estimate per frame.
///
/// Estimates for consecutive normal frames stay within the continuity
/// limit plus half a vocoder candidate step, `30 / hop_s` BPM, of each
/// other; band-fallback frames may jump anywhere in the global band.
pub fn estimate_hr(recording: &Recording, config: &PipelineConfig) -> Result<Vec<HrEstimate>> {
    Ok(estimate_hr_detailed(recording, config, false, false)?.estimates)
}

/// [`estimate_hr`] with optional capture of per-frame envelopes/spectra.
pub fn estimate_hr_detailed(
    recording: &Recording,
    config: &PipelineConfig,
    keep_envelopes: bool,
    keep_spectra: bool,
) -> Result<EstimateRun> {
    let fs = recording.sample_rate_hz();
    config.validate(fs)?;
    let filter = design_bandpass(
        config.band_low_hz,
        config.band_high_hz,
        fs,
        config.filter_order,
    )?;
    let filtered = filtfilt(recording.samples(), &filter)?;
    let ranges = frames(recording, config.window_s, config.hop_s)?;

    let global = (config.search_low_hz, config.search_high_hz);
    let mut estimates: Vec<HrEstimate> = Vec::with_capacity(ranges.len());
    let mut envelopes = keep_envelopes.then(Vec::new);
    let mut spectra = keep_spectra.then(Vec::new);
    let mut prev_spectrum: Option<Spectrum> = None;

    for (frame_index, range) in ranges.into_iter().enumerate() {
        let frame_start_s = range.start as f64 / fs;
        let analytic = analytic_signal(&filtered[range.clone()])?;
        let env = envelope_for_spectrum(&analytic);
        let spectrum =
            frame_spectrum(&env, fs, config.pad_factor, config.window_fn)?.at_time(frame_start_s);
        let raw_energy: f64 = recording.samples()[range].iter().map(|v| v * v).sum();

        let band = match estimates.last() {
            None => global,
            Some(prev) => next_search_band(prev.hr_bpm, config.continuity_bpm, global),
        };
        let (pick, flag, band_used) = match peak_pick(&spectrum, band.0, band.1) {
            Ok(p) => (p, FrameFlag::Ok, band),
            Err(Error::EmptyBand { .. }) if band != global => {
                let p = peak_pick(&spectrum, global.0, global.1)?;
                (p, FrameFlag::BandFallback, global)
            }
            Err(e) => return Err(e),
        };

        let estimate = if pick.amplitude <= DEGENERATE_RATIO * raw_energy {
            match estimates.last() {
                None => HrEstimate {
                    frame_index,
                    frame_start_s,
                    f_i_hz: pick.f_i_hz,
                    f_r_hz: pick.f_i_hz,
                    hr_bpm: 60.0 * pick.f_i_hz,
                    search_band_hz: band_used,
                    flag: FrameFlag::Degenerate,
                },
                Some(prev) => HrEstimate {
                    frame_index,
                    frame_start_s,
                    f_i_hz: pick.f_i_hz,
                    f_r_hz: prev.f_r_hz,
                    hr_bpm: prev.hr_bpm,
                    search_band_hz: band_used,
                    flag: FrameFlag::Held,
                },
            }
        } else {
            let f_r_hz = match &prev_spectrum {
                None => pick.f_i_hz,
                Some(prev) => {
                    let prev_pick = prev.peak_at(pick.bin_index);
                    vocoder_refine(&prev_pick, &pick, config.hop_s)?.f_r_hz
                }
            };
            HrEstimate {
                frame_index,
                frame_start_s,
                f_i_hz: pick.f_i_hz,
                f_r_hz,
                hr_bpm: 60.0 * f_r_hz,
                search_band_hz: band_used,
                flag,
            }
        };

        if let Some(envs) = envelopes.as_mut() {
            envs.push(env);
        }
        estimates.push(estimate);
        match spectra.as_mut() {
            Some(list) => {
                list.push(spectrum.clone());
                prev_spectrum = Some(spectrum);
            }
            None => prev_spectrum = Some(spectrum),
        }
    }

    Ok(EstimateRun {
        estimates,
        envelopes,
        spectra,
    })
}

/// A complete set of estimates plus the context needed to interpret it.
/// This is what the estimate output files carry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateDoc {
    pub config: PipelineConfig,
    pub sample_rate_hz: f64,
    pub label: String,
    pub frames: Vec<HrEstimate>,
}

/// Writes estimates as CSV: `# key=value` header lines echoing the config,
/// sample rate and label, then one row per frame.
pub fn write_estimates_csv(doc: &EstimateDoc, mut w: impl std::io::Write) -> Result<()> {
    for (key, value) in doc.config.entries() {
        writeln!(w, "# {key}={value}")?;
    }
    writeln!(w, "# sample_rate_hz={}", format_f64(doc.sample_rate_hz))?;
    writeln!(w, "# label={}", doc.label)?;
    writeln!(w, "frame_index,frame_start_s,f_i_hz,f_r_hz,hr_bpm,flag")?;
    for e in &doc.frames {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            e.frame_index,
            format_f64(e.frame_start_s),
            format_f64(e.f_i_hz),
            format_f64(e.f_r_hz),
            format_f64(e.hr_bpm),
            e.flag
        )?;
    }
    Ok(())
}

/// Reads an estimates CSV written by [`write_estimates_csv`].
///
/// The CSV rows do not carry per-frame search bands, so those are restored
/// as the global band from the echoed config.
pub fn read_estimates_csv(path: &Path) -> Result<EstimateDoc> {
    let text = std::fs::read_to_string(path)?;
    let mut config = PipelineConfig::default();
    let mut sample_rate_hz = f64::NAN;
    let mut label = String::new();
    let mut frames: Vec<HrEstimate> = Vec::new();
    let mut seen_header = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                let (key, value) = (key.trim(), value.trim());
                match key {
                    "sample_rate_hz" => {
                        sample_rate_hz = value.parse().map_err(|_| {
                            Error::parse(path, idx + 1, format!("bad sample_rate_hz \"{value}\""))
                        })?;
                    }
                    "label" => label = value.to_string(),
                    _ => {
                        config
                            .set(key, value)
                            .map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
                    }
                }
            }
            continue;
        }
        if !seen_header {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols != ["frame_index", "frame_start_s", "f_i_hz", "f_r_hz", "hr_bpm", "flag"] {
                return Err(Error::parse(path, idx + 1, format!("unexpected header \"{line}\"")));
            }
            seen_header = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 6 {
            return Err(Error::parse(path, idx + 1, format!("expected 6 columns, got {}", cols.len())));
        }
        let bad = |what: &str| Error::parse(path, idx + 1, format!("bad {what} \"{line}\""));
        let estimate = HrEstimate {
            frame_index: cols[0].parse().map_err(|_| bad("frame_index"))?,
            frame_start_s: cols[1].parse().map_err(|_| bad("frame_start_s"))?,
            f_i_hz: cols[2].parse().map_err(|_| bad("f_i_hz"))?,
            f_r_hz: cols[3].parse().map_err(|_| bad("f_r_hz"))?,
            hr_bpm: cols[4].parse().map_err(|_| bad("hr_bpm"))?,
            search_band_hz: (config.search_low_hz, config.search_high_hz),
            flag: cols[5].parse()?,
        };
        if let Some(last) = frames.last() {
            if estimate.frame_index <= last.frame_index {
                return Err(Error::parse(path, idx + 1, "frame_index must increase"));
            }
        }
        frames.push(estimate);
    }

    if !seen_header {
        return Err(Error::parse(path, 1, "missing estimates header row"));
    }
    if !sample_rate_hz.is_finite() {
        return Err(Error::Config(format!(
            "{}: missing \"# sample_rate_hz=<value>\" header",
            path.display()
        )));
    }
    Ok(EstimateDoc {
        config,
        sample_rate_hz,
        label,
        frames,
    })
}

/// Writes the JSON variant of the estimates document.
pub fn write_estimates_json(doc: &EstimateDoc, mut w: impl std::io::Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, doc)
        .map_err(|e| Error::Validation(format!("serializing estimates: {e}")))?;
    writeln!(w)?;
    Ok(())
}

/// Reads the JSON variant of the estimates document.
pub fn read_estimates_json(path: &Path) -> Result<EstimateDoc> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::parse(path, e.line(), e.to_string()))
}

/// Reads an estimates file, choosing the format by extension
/// (`.json` for JSON, anything else CSV).
pub fn read_estimates(path: &Path) -> Result<EstimateDoc> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("json") => read_estimates_json(path),
        _ => read_estimates_csv(path),
    }
}
