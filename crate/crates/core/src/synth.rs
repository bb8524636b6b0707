//! Synthetic recordings with known ground truth.
//!
//! The model is respiration plus an amplitude-modulated carrier plus white
//! noise: `s(t) = r sin(2 pi f_resp t) + a(t) cos(2 pi f_c t) + e(t)`. The
//! modulation `a(t)` is a train of Hann-shaped pulses, one per beat, and
//! beat times come from integrating the instantaneous rate, so the
//! annotation is exact by construction rather than estimated.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::io::{save_annotation, save_recording_csv, Recording, ReferenceAnnotation};

/// Heart-rate range accepted by the generator, matching the default
/// spectral search band in BPM.
const HR_MIN_BPM: f64 = 36.0;
const HR_MAX_BPM: f64 = 240.0;

/// Carrier placement limits: strictly inside the default pass band.
const CARRIER_MIN_HZ: f64 = 0.7;
const CARRIER_MAX_HZ: f64 = 10.0;

/// Piecewise-linear instantaneous heart rate over time.
#[derive(Debug, Clone, PartialEq)]
pub struct HrProfile {
    breakpoints: Vec<(f64, f64)>,
}

impl HrProfile {
    /// Builds a profile from `(time_s, bpm)` breakpoints with strictly
    /// increasing times. Rates must stay within [36, 240] BPM.
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::Validation("heart-rate profile needs at least one breakpoint".into()));
        }
        for (i, &(t, bpm)) in breakpoints.iter().enumerate() {
            if !t.is_finite() || !bpm.is_finite() {
                return Err(Error::Validation(format!(
                    "breakpoint {i} is not finite: ({t}, {bpm})"
                )));
            }
            if !(HR_MIN_BPM..=HR_MAX_BPM).contains(&bpm) {
                return Err(Error::Validation(format!(
                    "breakpoint {i}: rate {bpm} BPM outside [{HR_MIN_BPM}, {HR_MAX_BPM}]"
                )));
            }
            if i > 0 && t <= breakpoints[i - 1].0 {
                return Err(Error::Validation(format!(
                    "breakpoint times must be strictly increasing, but entry {i} ({t}) <= {}",
                    breakpoints[i - 1].0
                )));
            }
        }
        Ok(HrProfile { breakpoints })
    }

    pub fn constant(bpm: f64) -> Self {
        HrProfile::new(vec![(0.0, bpm)]).expect("constant rate outside the accepted range")
    }

    /// Instantaneous rate at `t`, clamped to the profile's end values.
    pub fn value_at(&self, t: f64) -> f64 {
        let pts = &self.breakpoints;
        if t <= pts[0].0 {
            return pts[0].1;
        }
        if t >= pts[pts.len() - 1].0 {
            return pts[pts.len() - 1].1;
        }
        let i = pts.partition_point(|&(bt, _)| bt <= t);
        let (t0, v0) = pts[i - 1];
        let (t1, v1) = pts[i];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    pub fn max_bpm(&self) -> f64 {
        self.breakpoints
            .iter()
            .map(|&(_, v)| v)
            .fold(f64::MIN, f64::max)
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }
}

/// Parameters of one synthetic recording.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalModelParams {
    pub label: String,
    pub hr_profile: HrProfile,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    /// Respiration frequency, Hz.
    pub resp_rate_hz: f64,
    /// Respiration amplitude.
    pub resp_amp: f64,
    /// Carrier under the beat-synchronous modulation, Hz.
    pub carrier_hz: f64,
    /// Duration of each Hann-shaped pulse, seconds.
    pub pulse_width_s: f64,
    /// Peak value of each pulse.
    pub pulse_amp: f64,
    /// Standard deviation of the additive white noise.
    pub noise_std: f64,
    /// Noise generator seed; equal seeds give bit-identical recordings.
    pub seed: u64,
}

impl Default for SignalModelParams {
    fn default() -> Self {
        SignalModelParams {
            label: "synthetic".into(),
            hr_profile: HrProfile::constant(72.0),
            duration_s: 60.0,
            sample_rate_hz: 225.0,
            resp_rate_hz: 0.25,
            resp_amp: 1.0,
            carrier_hz: 5.0,
            pulse_width_s: 0.12,
            pulse_amp: 1.0,
            noise_std: 0.1,
            seed: 0,
        }
    }
}

impl SignalModelParams {
    fn validate(&self) -> Result<()> {
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::Validation(format!(
                "duration_s must be positive, got {}",
                self.duration_s
            )));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::Validation(format!(
                "sample_rate_hz must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        for (name, v) in [
            ("resp_rate_hz", self.resp_rate_hz),
            ("resp_amp", self.resp_amp),
            ("pulse_amp", self.pulse_amp),
            ("noise_std", self.noise_std),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Validation(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if !(self.carrier_hz > CARRIER_MIN_HZ && self.carrier_hz < CARRIER_MAX_HZ) {
            return Err(Error::Validation(format!(
                "carrier_hz must lie strictly inside ({CARRIER_MIN_HZ}, {CARRIER_MAX_HZ}), got {}",
                self.carrier_hz
            )));
        }
        if self.carrier_hz >= self.sample_rate_hz / 2.0 {
            return Err(Error::Validation(format!(
                "carrier_hz {} is at or above the Nyquist frequency",
                self.carrier_hz
            )));
        }
        let shortest_beat_s = 60.0 / self.hr_profile.max_bpm();
        if !(self.pulse_width_s > 0.0 && self.pulse_width_s < shortest_beat_s) {
            return Err(Error::Validation(format!(
                "pulse_width_s {} must be positive and shorter than the shortest \
                 beat interval {shortest_beat_s:.4} s",
                self.pulse_width_s
            )));
        }
        Ok(())
    }
}

/// Beat times from integrating the instantaneous rate: beat `k` falls
/// where the accumulated phase crosses `k` cycles. The first beat is at 0.
fn beat_times(profile: &HrProfile, duration_s: f64, sample_rate_hz: f64) -> Vec<f64> {
    let dt = 1.0 / sample_rate_hz;
    let n = (duration_s * sample_rate_hz).round() as usize;
    let mut beats = vec![0.0];
    let mut phase = 0.0f64;
    let mut target = 1.0f64;
    let mut rate0 = profile.value_at(0.0);
    for i in 0..n {
        let t0 = i as f64 * dt;
        let t1 = (i + 1) as f64 * dt;
        let rate1 = profile.value_at(t1);
        let next = phase + (rate0 + rate1) / 120.0 * dt;
        while next >= target {
            let tau = t0 + (target - phase) / (next - phase) * dt;
            // A crossing that rounds onto the recording's end belongs to the
            // next (absent) beat, not this recording.
            if tau < duration_s - 1e-9 {
                beats.push(tau);
            }
            target += 1.0;
        }
        phase = next;
        rate0 = rate1;
    }
    beats
}

/// Generates one synthetic recording and its exact beat annotation.
pub fn generate_bcg(params: &SignalModelParams) -> Result<(Recording, ReferenceAnnotation)> {
    params.validate()?;
    let fs = params.sample_rate_hz;
    let n = (params.duration_s * fs).round() as usize;
    if n == 0 {
        return Err(Error::Validation(
            "duration and sample rate give an empty recording".into(),
        ));
    }

    let beats = beat_times(&params.hr_profile, params.duration_s, fs);

    // Beat-synchronous modulation: one Hann pulse per beat.
    let mut modulation = vec![0.0f64; n];
    let w = params.pulse_width_s;
    for &tau in &beats {
        let i0 = (tau * fs).ceil().max(0.0) as usize;
        let i1 = (((tau + w) * fs).floor() as usize).min(n - 1);
        for i in i0..=i1 {
            let u = (i as f64 / fs - tau) / w;
            if (0.0..=1.0).contains(&u) {
                modulation[i] +=
                    params.pulse_amp * 0.5 * (1.0 - (std::f64::consts::TAU * u).cos());
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / fs;
        let mut v = params.resp_amp * (std::f64::consts::TAU * params.resp_rate_hz * t).sin()
            + modulation[i] * (std::f64::consts::TAU * params.carrier_hz * t).cos();
        if params.noise_std > 0.0 {
            let g: f64 = rng.sample(StandardNormal);
            v += params.noise_std * g;
        }
        samples.push(v);
    }

    let recording = Recording::new(samples, fs, params.label.clone())?;
    let annotation = ReferenceAnnotation::new(beats)?;
    Ok((recording, annotation))
}

/// A list of recordings to generate together.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub entries: Vec<SignalModelParams>,
}

impl CorpusSpec {
    /// Parses a corpus description: blocks of `key = value` lines separated
    /// by blank lines, `#` starting a comment line.
    ///
    /// Keys per block: `label`, `hr_bpm` (a single rate or `t:bpm`
    /// breakpoints separated by commas), `duration_s`, `sample_rate_hz`,
    /// `resp_rate_hz`, `resp_amp`, `carrier_hz`, `pulse_width_s`,
    /// `pulse_amp`, `noise_std`, `seed`. Omitted keys fall back to the
    /// defaults; a missing label becomes `recNN` and a missing seed the
    /// block's index.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        let mut block: Vec<(usize, String)> = Vec::new();
        let mut lines: Vec<Option<(usize, String)>> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                lines.push(None);
            } else if !line.starts_with('#') {
                lines.push(Some((idx + 1, line.to_string())));
            }
        }
        lines.push(None);

        for entry in lines {
            match entry {
                Some(pair) => block.push(pair),
                None => {
                    if !block.is_empty() {
                        let index = entries.len();
                        entries.push(Self::parse_block(&block, index, origin)?);
                        block.clear();
                    }
                }
            }
        }
        Ok(CorpusSpec { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    fn parse_block(
        block: &[(usize, String)],
        index: usize,
        origin: &Path,
    ) -> Result<SignalModelParams> {
        let mut params = SignalModelParams {
            label: format!("rec{:02}", index + 1),
            seed: index as u64,
            ..SignalModelParams::default()
        };
        for (line_no, line) in block {
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::parse(origin, *line_no, format!("expected key = value, got \"{line}\""))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: String| Error::parse(origin, *line_no, what);
            let num = |v: &str| -> Result<f64> {
                v.parse::<f64>()
                    .map_err(|_| bad(format!("{key}: expected a number, got \"{v}\"")))
            };
            match key {
                "label" => params.label = value.to_string(),
                "duration_s" => params.duration_s = num(value)?,
                "sample_rate_hz" => params.sample_rate_hz = num(value)?,
                "resp_rate_hz" => params.resp_rate_hz = num(value)?,
                "resp_amp" => params.resp_amp = num(value)?,
                "carrier_hz" => params.carrier_hz = num(value)?,
                "pulse_width_s" => params.pulse_width_s = num(value)?,
                "pulse_amp" => params.pulse_amp = num(value)?,
                "noise_std" => params.noise_std = num(value)?,
                "seed" => {
                    params.seed = value
                        .parse::<u64>()
                        .map_err(|_| bad(format!("seed: expected an unsigned integer, got \"{value}\"")))?;
                }
                "hr_bpm" => {
                    params.hr_profile = Self::parse_rate(value)
                        .map_err(|e| bad(format!("hr_bpm: {e}")))?;
                }
                other => return Err(bad(format!("unknown key \"{other}\""))),
            }
        }
        Ok(params)
    }

    /// Either a single number (constant rate) or `t:bpm` pairs separated
    /// by commas.
    fn parse_rate(value: &str) -> std::result::Result<HrProfile, String> {
        if !value.contains(':') {
            let bpm: f64 = value.parse().map_err(|_| format!("bad rate \"{value}\""))?;
            return HrProfile::new(vec![(0.0, bpm)]).map_err(|e| e.to_string());
        }
        let mut pts = Vec::new();
        for part in value.split(',') {
            let part = part.trim();
            let (t, bpm) = part
                .split_once(':')
                .ok_or_else(|| format!("bad breakpoint \"{part}\""))?;
            let t: f64 = t.trim().parse().map_err(|_| format!("bad time in \"{part}\""))?;
            let bpm: f64 = bpm.trim().parse().map_err(|_| format!("bad rate in \"{part}\""))?;
            pts.push((t, bpm));
        }
        HrProfile::new(pts).map_err(|e| e.to_string())
    }
}

/// Paths written for one corpus entry.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusFiles {
    pub label: String,
    pub recording: PathBuf,
    pub annotation: PathBuf,
}

/// Generates every entry of `spec` into `out_dir` as `<label>.csv` plus
/// `<label>.beats`.
pub fn make_corpus(spec: &CorpusSpec, out_dir: &Path) -> Result<Vec<CorpusFiles>> {
    for (i, a) in spec.entries.iter().enumerate() {
        for b in &spec.entries[i + 1..] {
            if a.label == b.label {
                return Err(Error::Validation(format!(
                    "duplicate corpus label \"{}\"",
                    a.label
                )));
            }
        }
    }
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::with_capacity(spec.entries.len());
    for params in &spec.entries {
        let (recording, annotation) = generate_bcg(params)?;
        let rec_path = out_dir.join(format!("{}.csv", params.label));
        let ann_path = out_dir.join(format!("{}.beats", params.label));
        save_recording_csv(&recording, &rec_path)?;
        save_annotation(&annotation, &ann_path)?;
        written.push(CorpusFiles {
            label: params.label.clone(),
            recording: rec_path,
            annotation: ann_path,
        });
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_rate_beats_are_evenly_spaced() {
        let params = SignalModelParams {
            hr_profile: HrProfile::constant(60.0),
            duration_s: 60.0,
            noise_std: 0.0,
            ..SignalModelParams::default()
        };
        let (_, ann) = generate_bcg(&params).unwrap();
        assert_eq!(ann.len(), 60);
        for (k, &t) in ann.peak_times_s().iter().enumerate() {
            assert!((t - k as f64).abs() < 1e-9, "beat {k} at {t}");
        }
    }

    #[test]
    fn beat_count_matches_the_rate_integral() {
        let params = SignalModelParams {
            hr_profile: HrProfile::new(vec![(0.0, 60.0), (600.0, 90.0)]).unwrap(),
            duration_s: 600.0,
            noise_std: 0.0,
            ..SignalModelParams::default()
        };
        let (_, ann) = generate_bcg(&params).unwrap();
        // Mean rate 75 BPM over 10 minutes: 750 cycles.
        assert!((ann.len() as i64 - 750).abs() <= 1, "got {}", ann.len());
    }

    #[test]
    fn accelerating_ramp_shrinks_beat_intervals() {
        let params = SignalModelParams {
            hr_profile: HrProfile::new(vec![(0.0, 60.0), (300.0, 120.0)]).unwrap(),
            duration_s: 300.0,
            pulse_width_s: 0.3,
            noise_std: 0.0,
            ..SignalModelParams::default()
        };
        let (_, ann) = generate_bcg(&params).unwrap();
        let times = ann.peak_times_s();
        let mut last_interval = f64::INFINITY;
        for pair in times.windows(2).step_by(25) {
            let interval = pair[1] - pair[0];
            assert!(interval < last_interval + 1e-9);
            last_interval = interval;
        }
        let first = times[1] - times[0];
        let last = times[times.len() - 1] - times[times.len() - 2];
        assert!((first - 1.0).abs() < 0.01);
        assert!((last - 0.5).abs() < 0.01);
    }

    #[test]
    fn same_seed_reproduces_the_recording_bit_for_bit() {
        let params = SignalModelParams {
            duration_s: 45.0,
            noise_std: 0.4,
            seed: 1234,
            ..SignalModelParams::default()
        };
        let (rec_a, ann_a) = generate_bcg(&params).unwrap();
        let (rec_b, ann_b) = generate_bcg(&params).unwrap();
        assert_eq!(rec_a, rec_b);
        assert_eq!(ann_a, ann_b);
    }

    #[test]
    fn different_seeds_give_uncorrelated_noise() {
        let base = SignalModelParams {
            duration_s: 500.0,
            resp_amp: 0.0,
            pulse_amp: 0.0,
            noise_std: 1.0,
            ..SignalModelParams::default()
        };
        let (a, _) = generate_bcg(&SignalModelParams { seed: 1, ..base.clone() }).unwrap();
        let (b, _) = generate_bcg(&SignalModelParams { seed: 2, ..base.clone() }).unwrap();
        let xs = a.samples();
        let ys = b.samples();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let mut cov = 0.0;
        let mut vx = 0.0;
        let mut vy = 0.0;
        for (x, y) in xs.iter().zip(ys) {
            cov += (x - mx) * (y - my);
            vx += (x - mx) * (x - mx);
            vy += (y - my) * (y - my);
        }
        let r = cov / (vx.sqrt() * vy.sqrt());
        assert!(r.abs() < 0.05, "correlation {r}");
    }

    #[test]
    fn envelope_spectrum_peaks_at_the_programmed_rate() {
        use crate::config::WindowFn;
        use crate::envelope::{analytic_signal, envelope_for_spectrum};
        use crate::filter::{design_bandpass, filtfilt};
        use crate::spectrum::{frame_spectrum, peak_pick};

        let params = SignalModelParams {
            hr_profile: HrProfile::constant(66.0),
            duration_s: 60.0,
            noise_std: 0.0,
            ..SignalModelParams::default()
        };
        let (rec, _) = generate_bcg(&params).unwrap();
        let filter = design_bandpass(0.7, 10.0, rec.sample_rate_hz(), 4).unwrap();
        let filtered = filtfilt(rec.samples(), &filter).unwrap();
        let frame = analytic_signal(&filtered[0..6750]).unwrap();
        let env = envelope_for_spectrum(&frame);
        let spectrum = frame_spectrum(&env, rec.sample_rate_hz(), 8, WindowFn::Hann).unwrap();
        let pick = peak_pick(&spectrum, 0.6, 4.0).unwrap();
        assert!(
            (pick.f_i_hz - 1.1).abs() <= spectrum.bin_spacing_hz,
            "peak at {} Hz",
            pick.f_i_hz
        );
    }

    #[test]
    fn profile_interpolates_and_clamps() {
        let p = HrProfile::new(vec![(0.0, 60.0), (10.0, 90.0)]).unwrap();
        assert_eq!(p.value_at(-5.0), 60.0);
        assert_eq!(p.value_at(0.0), 60.0);
        assert!((p.value_at(5.0) - 75.0).abs() < 1e-12);
        assert_eq!(p.value_at(10.0), 90.0);
        assert_eq!(p.value_at(100.0), 90.0);
        assert_eq!(p.max_bpm(), 90.0);
    }

    #[test]
    fn profile_rejects_bad_breakpoints() {
        assert!(HrProfile::new(vec![]).is_err());
        assert!(HrProfile::new(vec![(0.0, 30.0)]).is_err());
        assert!(HrProfile::new(vec![(0.0, 250.0)]).is_err());
        assert!(HrProfile::new(vec![(0.0, 60.0), (0.0, 70.0)]).is_err());
        assert!(HrProfile::new(vec![(5.0, 60.0), (1.0, 70.0)]).is_err());
    }

    #[test]
    fn params_validation_catches_misplaced_carrier_and_wide_pulses() {
        let out_of_band = SignalModelParams {
            carrier_hz: 0.5,
            ..SignalModelParams::default()
        };
        assert!(generate_bcg(&out_of_band).is_err());

        let above_band = SignalModelParams {
            carrier_hz: 10.5,
            ..SignalModelParams::default()
        };
        assert!(generate_bcg(&above_band).is_err());

        let wide_pulse = SignalModelParams {
            hr_profile: HrProfile::constant(120.0),
            pulse_width_s: 0.6,
            ..SignalModelParams::default()
        };
        assert!(generate_bcg(&wide_pulse).is_err());
    }

    #[test]
    fn corpus_spec_parses_blocks_with_defaults() {
        let text = "\
# two recordings
label = steady
hr_bpm = 72
duration_s = 40
seed = 9

hr_bpm = 0:60, 300:90
duration_s = 35
noise_std = 0.3
";
        let spec = CorpusSpec::parse(text, Path::new("inline.spec")).unwrap();
        assert_eq!(spec.entries.len(), 2);
        assert_eq!(spec.entries[0].label, "steady");
        assert_eq!(spec.entries[0].seed, 9);
        assert_eq!(spec.entries[0].duration_s, 40.0);
        assert_eq!(spec.entries[0].hr_profile, HrProfile::constant(72.0));

        assert_eq!(spec.entries[1].label, "rec02");
        assert_eq!(spec.entries[1].seed, 1);
        assert_eq!(spec.entries[1].noise_std, 0.3);
        assert_eq!(
            spec.entries[1].hr_profile,
            HrProfile::new(vec![(0.0, 60.0), (300.0, 90.0)]).unwrap()
        );
    }

    #[test]
    fn corpus_spec_names_the_bad_line() {
        let text = "label = a\nhr_bpm = 72\n\nwobble = 3\n";
        match CorpusSpec::parse(text, Path::new("inline.spec")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn make_corpus_writes_loadable_pairs() {
        use crate::io::{load_annotation, load_recording, RecordingFormat};

        let dir = std::env::temp_dir().join("bcg_hr_synth_corpus_test");
        let _ = std::fs::remove_dir_all(&dir);
        let spec = CorpusSpec {
            entries: vec![
                SignalModelParams {
                    label: "one".into(),
                    duration_s: 35.0,
                    ..SignalModelParams::default()
                },
                SignalModelParams {
                    label: "two".into(),
                    duration_s: 35.0,
                    seed: 1,
                    ..SignalModelParams::default()
                },
            ],
        };
        let files = make_corpus(&spec, &dir).unwrap();
        assert_eq!(files.len(), 2);
        for f in &files {
            let rec = load_recording(&f.recording, RecordingFormat::Csv).unwrap();
            assert_eq!(rec.sample_rate_hz(), 225.0);
            assert_eq!(rec.len(), 7875);
            let ann = load_annotation(&f.annotation).unwrap();
            assert!(ann.len() > 35);
            assert_eq!(rec.label(), f.label);
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn make_corpus_rejects_duplicate_labels() {
        let dir = std::env::temp_dir().join("bcg_hr_synth_dup_test");
        let spec = CorpusSpec {
            entries: vec![
                SignalModelParams { label: "same".into(), ..SignalModelParams::default() },
                SignalModelParams { label: "same".into(), ..SignalModelParams::default() },
            ],
        };
        assert!(matches!(
            make_corpus(&spec, &dir),
            Err(Error::Validation(_))
        ));
    }
}
