//! Recording and annotation containers plus their on-disk formats.
//!
//! A recording travels as CSV (one sample per line, `# key=value` header
//! comments) or as mono WAV. Reference beat annotations travel as a text
//! file with one timestamp in seconds per line, strictly increasing.

use std::io::{BufWriter, Write as _};
use std::path::Path;

use crate::error::{Error, Result};

/// A single-channel recording sampled at a fixed rate.
///
/// Values are immutable after construction; the constructor enforces that
/// samples are finite and the sample rate is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    samples: Vec<f64>,
    sample_rate_hz: f64,
    label: String,
}

impl Recording {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64, label: impl Into<String>) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::Validation(format!(
                "sample rate must be positive and finite, got {sample_rate_hz}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::Validation("recording has no samples".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "sample {i} is not finite ({})",
                samples[i]
            )));
        }
        Ok(Recording {
            samples,
            sample_rate_hz,
            label: label.into(),
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }
}

/// Reference beat times in seconds, strictly increasing and non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceAnnotation {
    peak_times_s: Vec<f64>,
}

impl ReferenceAnnotation {
    pub fn new(peak_times_s: Vec<f64>) -> Result<Self> {
        for (i, &t) in peak_times_s.iter().enumerate() {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::Validation(format!(
                    "peak time {i} must be finite and non-negative, got {t}"
                )));
            }
            if i > 0 && t <= peak_times_s[i - 1] {
                return Err(Error::Validation(format!(
                    "peak times must be strictly increasing, but entry {i} ({t}) <= entry {} ({})",
                    i - 1,
                    peak_times_s[i - 1]
                )));
            }
        }
        Ok(ReferenceAnnotation { peak_times_s })
    }

    pub fn peak_times_s(&self) -> &[f64] {
        &self.peak_times_s
    }

    pub fn len(&self) -> usize {
        self.peak_times_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peak_times_s.is_empty()
    }
}

/// Recording file formats understood by [`load_recording`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordingFormat {
    Csv,
    Wav,
}

impl RecordingFormat {
    /// Picks a format from a file extension (case-insensitive).
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("csv") => Ok(RecordingFormat::Csv),
            Some("wav") => Ok(RecordingFormat::Wav),
            other => Err(Error::Validation(format!(
                "cannot infer recording format from extension {:?} of {}",
                other.unwrap_or(""),
                path.display()
            ))),
        }
    }
}

/// Loads a recording, the label being the file stem.
pub fn load_recording(path: &Path, format: RecordingFormat) -> Result<Recording> {
    match format {
        RecordingFormat::Csv => load_recording_csv(path),
        RecordingFormat::Wav => load_recording_wav(path),
    }
}

fn label_of(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("recording")
        .to_string()
}

fn load_recording_csv(path: &Path) -> Result<Recording> {
    let text = std::fs::read_to_string(path)?;
    let mut sample_rate_hz: Option<f64> = None;
    let mut samples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "sample_rate_hz" {
                    let v: f64 = value.trim().parse().map_err(|_| {
                        Error::parse(path, idx + 1, format!("bad sample_rate_hz \"{}\"", value.trim()))
                    })?;
                    sample_rate_hz = Some(v);
                }
            }
            continue;
        }
        let v: f64 = line.parse().map_err(|_| {
            Error::parse(path, idx + 1, format!("expected a sample value, got \"{line}\""))
        })?;
        if !v.is_finite() {
            return Err(Error::parse(path, idx + 1, format!("sample is not finite ({line})")));
        }
        samples.push(v);
    }
    let sample_rate_hz = sample_rate_hz.ok_or_else(|| {
        Error::Config(format!(
            "{}: missing \"# sample_rate_hz=<value>\" header",
            path.display()
        ))
    })?;
    Recording::new(samples, sample_rate_hz, label_of(path))
}

fn load_recording_wav(path: &Path) -> Result<Recording> {
    let reader = hound::WavReader::open(path)
        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::Validation(format!(
            "{}: expected mono WAV, got {} channels",
            path.display(),
            spec.channels
        )));
    }
    let samples: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?,
        hound::SampleFormat::Int => {
            let scale = 1.0 / f64::from(1u32 << (spec.bits_per_sample - 1));
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?
        }
    };
    Recording::new(samples, f64::from(spec.sample_rate), label_of(path))
}

/// Writes a recording as CSV. Reloading reproduces the samples bit-exactly.
pub fn save_recording_csv(recording: &Recording, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# sample_rate_hz={}", recording.sample_rate_hz())?;
    for v in recording.samples() {
        writeln!(w, "{v}")?;
    }
    w.flush()?;
    Ok(())
}

/// Loads a beat annotation: one timestamp per line, `#` comments allowed.
pub fn load_annotation(path: &Path) -> Result<ReferenceAnnotation> {
    let text = std::fs::read_to_string(path)?;
    let mut times = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let t: f64 = line.parse().map_err(|_| {
            Error::parse(path, idx + 1, format!("expected a timestamp, got \"{line}\""))
        })?;
        times.push(t);
    }
    ReferenceAnnotation::new(times)
}

/// Writes a beat annotation, one timestamp per line.
pub fn save_annotation(annotation: &ReferenceAnnotation, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    for t in annotation.peak_times_s() {
        writeln!(w, "{t}")?;
    }
    w.flush()?;
    Ok(())
}
