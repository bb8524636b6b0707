//! Agreement metrics between estimated and reference heart rates.
//!
//! The reference rate for a frame is `60 / T` with `T` the mean beat
//! interval of the annotated peaks inside that frame. Error statistics are
//! computed on absolute errors: the mean (MAE), its population standard
//! deviation, and Bland-Altman limits `MAE +/- 1.96 sigma`. Pearson's r
//! measures linear agreement of the paired rate series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::ReferenceAnnotation;

/// Reference and estimated rates paired frame by frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSeries {
    reference_bpm: Vec<f64>,
    estimate_bpm: Vec<f64>,
    frame_times_s: Vec<f64>,
}

impl PairedSeries {
    pub fn new(
        reference_bpm: Vec<f64>,
        estimate_bpm: Vec<f64>,
        frame_times_s: Vec<f64>,
    ) -> Result<Self> {
        if reference_bpm.len() != estimate_bpm.len()
            || reference_bpm.len() != frame_times_s.len()
        {
            return Err(Error::Pairing(format!(
                "series lengths differ: {} reference, {} estimated, {} times",
                reference_bpm.len(),
                estimate_bpm.len(),
                frame_times_s.len()
            )));
        }
        if reference_bpm.is_empty() {
            return Err(Error::Pairing("no frames to compare".into()));
        }
        for (name, series) in [("reference", &reference_bpm), ("estimate", &estimate_bpm)] {
            if let Some(i) = series.iter().position(|v| !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "{name} value {i} is not finite ({})",
                    series[i]
                )));
            }
        }
        Ok(PairedSeries {
            reference_bpm,
            estimate_bpm,
            frame_times_s,
        })
    }

    pub fn reference_bpm(&self) -> &[f64] {
        &self.reference_bpm
    }

    pub fn estimate_bpm(&self) -> &[f64] {
        &self.estimate_bpm
    }

    pub fn frame_times_s(&self) -> &[f64] {
        &self.frame_times_s
    }

    pub fn len(&self) -> usize {
        self.reference_bpm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reference_bpm.is_empty()
    }

    fn abs_errors(&self) -> Vec<f64> {
        self.reference_bpm
            .iter()
            .zip(&self.estimate_bpm)
            .map(|(r, e)| (e - r).abs())
            .collect()
    }
}

/// Per-frame reference rates from a beat annotation.
///
/// `frame_spans_s` are `(start, end)` times; peaks with `start <= t <= end`
/// belong to the frame. A frame containing fewer than two peaks has no
/// measurable interval and is reported as an error naming the frame.
pub fn reference_hr(
    annotation: &ReferenceAnnotation,
    frame_spans_s: &[(f64, f64)],
) -> Result<Vec<f64>> {
    let times = annotation.peak_times_s();
    let mut out = Vec::with_capacity(frame_spans_s.len());
    for (i, &(start, end)) in frame_spans_s.iter().enumerate() {
        if !(end > start) {
            return Err(Error::Validation(format!(
                "frame {i} span ({start}, {end}) is empty"
            )));
        }
        let lo = times.partition_point(|&t| t < start);
        let hi = times.partition_point(|&t| t <= end);
        let count = hi - lo;
        if count < 2 {
            return Err(Error::Validation(format!(
                "frame {i} ([{start}, {end}] s) contains {count} annotated beats; \
                 need at least 2 to measure a rate"
            )));
        }
        let mean_interval = (times[hi - 1] - times[lo]) / (count - 1) as f64;
        out.push(60.0 / mean_interval);
    }
    Ok(out)
}

/// Mean absolute error in BPM.
pub fn mae(pairs: &PairedSeries) -> f64 {
    let errs = pairs.abs_errors();
    errs.iter().sum::<f64>() / errs.len() as f64
}

/// Population standard deviation of the absolute errors, BPM.
pub fn std_abs_err(pairs: &PairedSeries) -> f64 {
    let errs = pairs.abs_errors();
    let mean = errs.iter().sum::<f64>() / errs.len() as f64;
    let var = errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / errs.len() as f64;
    var.sqrt()
}

/// Pearson correlation between reference and estimated rates.
///
/// Undefined for fewer than two frames or when either series is constant.
pub fn pearson_r(pairs: &PairedSeries) -> Result<f64> {
    let n = pairs.len();
    if n < 2 {
        return Err(Error::Undefined(
            "correlation needs at least 2 frames".into(),
        ));
    }
    let xs = pairs.reference_bpm();
    let ys = pairs.estimate_bpm();
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::Undefined(
            "correlation is undefined for a constant series".into(),
        ));
    }
    Ok(cov / (vx.sqrt() * vy.sqrt()))
}

/// Bland-Altman data on absolute errors: per-frame means of the paired
/// rates, per-frame absolute differences, and agreement limits.
#[derive(Debug, Clone, PartialEq)]
pub struct BlandAltman {
    /// `(reference + estimate) / 2` per frame.
    pub means_bpm: Vec<f64>,
    /// `|estimate - reference|` per frame.
    pub abs_diffs_bpm: Vec<f64>,
    /// Mean of the absolute differences (equals the MAE).
    pub mean_diff_bpm: f64,
    /// `mean_diff +/- 1.96` population standard deviations.
    pub limits_bpm: (f64, f64),
}

pub fn bland_altman(pairs: &PairedSeries) -> BlandAltman {
    let means_bpm = pairs
        .reference_bpm()
        .iter()
        .zip(pairs.estimate_bpm())
        .map(|(r, e)| (r + e) / 2.0)
        .collect();
    let abs_diffs_bpm = pairs.abs_errors();
    let mean_diff_bpm = mae(pairs);
    let sd = std_abs_err(pairs);
    BlandAltman {
        means_bpm,
        abs_diffs_bpm,
        mean_diff_bpm,
        limits_bpm: (mean_diff_bpm - 1.96 * sd, mean_diff_bpm + 1.96 * sd),
    }
}

/// The summary block written by evaluations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_frames: usize,
    pub mae_bpm: f64,
    pub std_abs_err_bpm: f64,
    pub pearson_r: f64,
    pub bland_altman_limits_bpm: (f64, f64),
}

/// Computes every metric over one paired series.
pub fn report(pairs: &PairedSeries) -> Result<MetricsReport> {
    let ba = bland_altman(pairs);
    Ok(MetricsReport {
        n_frames: pairs.len(),
        mae_bpm: mae(pairs),
        std_abs_err_bpm: std_abs_err(pairs),
        pearson_r: pearson_r(pairs)?,
        bland_altman_limits_bpm: ba.limits_bpm,
    })
}
