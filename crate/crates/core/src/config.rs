//! Pipeline configuration: window geometry, filter band, search band,
//! padding and analysis window choice.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Analysis window applied to each envelope frame before the FFT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowFn {
    Rectangular,
    Hann,
}

impl fmt::Display for WindowFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindowFn::Rectangular => f.write_str("rectangular"),
            WindowFn::Hann => f.write_str("hann"),
        }
    }
}

impl FromStr for WindowFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rectangular" => Ok(WindowFn::Rectangular),
            "hann" => Ok(WindowFn::Hann),
            other => Err(Error::Config(format!(
                "unknown window_fn \"{other}\" (expected \"hann\" or \"rectangular\")"
            ))),
        }
    }
}

/// All tunable parameters of the estimation pipeline.
///
/// Values are plain data; cross-field consistency and compatibility with a
/// recording's sample rate are checked by [`PipelineConfig::validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Analysis frame length in seconds.
    pub window_s: f64,
    /// Frame advance in seconds.
    pub hop_s: f64,
    /// Band-pass lower edge in Hz.
    pub band_low_hz: f64,
    /// Band-pass upper edge in Hz.
    pub band_high_hz: f64,
    /// Butterworth prototype order (the band-pass has twice as many poles).
    pub filter_order: usize,
    /// Spectral search lower edge in Hz.
    pub search_low_hz: f64,
    /// Spectral search upper edge in Hz.
    pub search_high_hz: f64,
    /// Maximum allowed frame-to-frame HR change in BPM.
    pub continuity_bpm: f64,
    /// Zero-padding factor; 1 means no padding, >= 2 rounds the FFT length
    /// up to a power of two.
    pub pad_factor: usize,
    /// Analysis window applied before the frame FFT.
    pub window_fn: WindowFn,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            window_s: 30.0,
            hop_s: 15.0,
            band_low_hz: 0.7,
            band_high_hz: 10.0,
            filter_order: 4,
            search_low_hz: 0.6,
            search_high_hz: 4.0,
            continuity_bpm: 10.0,
            pad_factor: 8,
            window_fn: WindowFn::Hann,
        }
    }
}

impl PipelineConfig {
    /// Checks internal consistency and compatibility with a sample rate.
    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::Config(format!(
                "sample rate must be positive and finite, got {sample_rate_hz}"
            )));
        }
        for (name, v) in [
            ("window_s", self.window_s),
            ("hop_s", self.hop_s),
            ("band_low_hz", self.band_low_hz),
            ("band_high_hz", self.band_high_hz),
            ("search_low_hz", self.search_low_hz),
            ("search_high_hz", self.search_high_hz),
            ("continuity_bpm", self.continuity_bpm),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.hop_s > self.window_s {
            return Err(Error::Config(format!(
                "hop_s ({}) must not exceed window_s ({})",
                self.hop_s, self.window_s
            )));
        }
        let nyquist = sample_rate_hz / 2.0;
        if self.band_low_hz >= self.band_high_hz {
            return Err(Error::Config(format!(
                "band_low_hz ({}) must be below band_high_hz ({})",
                self.band_low_hz, self.band_high_hz
            )));
        }
        if self.band_high_hz >= nyquist {
            return Err(Error::Config(format!(
                "band_high_hz ({}) must be below the Nyquist frequency ({nyquist})",
                self.band_high_hz
            )));
        }
        if self.search_low_hz >= self.search_high_hz {
            return Err(Error::Config(format!(
                "search_low_hz ({}) must be below search_high_hz ({})",
                self.search_low_hz, self.search_high_hz
            )));
        }
        if self.search_high_hz >= nyquist {
            return Err(Error::Config(format!(
                "search_high_hz ({}) must be below the Nyquist frequency ({nyquist})",
                self.search_high_hz
            )));
        }
        if self.filter_order == 0 {
            return Err(Error::Config("filter_order must be at least 1".into()));
        }
        if self.pad_factor == 0 {
            return Err(Error::Config("pad_factor must be at least 1".into()));
        }
        Ok(())
    }

    /// Sets one field from its textual key and value. Used by the config
    /// file parser and by anything else that patches configs by name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num(key: &str, value: &str) -> Result<f64> {
            value.trim().parse::<f64>().map_err(|_| {
                Error::Config(format!("{key}: expected a number, got \"{value}\""))
            })
        }
        fn uint(key: &str, value: &str) -> Result<usize> {
            value.trim().parse::<usize>().map_err(|_| {
                Error::Config(format!("{key}: expected a non-negative integer, got \"{value}\""))
            })
        }
        match key {
            "window_s" => self.window_s = num(key, value)?,
            "hop_s" => self.hop_s = num(key, value)?,
            "band_low_hz" => self.band_low_hz = num(key, value)?,
            "band_high_hz" => self.band_high_hz = num(key, value)?,
            "filter_order" => self.filter_order = uint(key, value)?,
            "search_low_hz" => self.search_low_hz = num(key, value)?,
            "search_high_hz" => self.search_high_hz = num(key, value)?,
            "continuity_bpm" => self.continuity_bpm = num(key, value)?,
            "pad_factor" => self.pad_factor = uint(key, value)?,
            "window_fn" => self.window_fn = value.trim().parse()?,
            other => {
                return Err(Error::Config(format!("unknown config key \"{other}\"")));
            }
        }
        Ok(())
    }

    /// Parses a flat `key = value` config file. Blank lines and lines whose
    /// first non-space character is `#` are ignored. Unknown keys are errors.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config = PipelineConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::parse(path, idx + 1, format!("expected key = value, got \"{line}\""))
            })?;
            config
                .set(key.trim(), value.trim())
                .map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
        }
        Ok(config)
    }

    /// Key/value pairs in a fixed order, for echoing into output headers.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("window_s", format_f64(self.window_s)),
            ("hop_s", format_f64(self.hop_s)),
            ("band_low_hz", format_f64(self.band_low_hz)),
            ("band_high_hz", format_f64(self.band_high_hz)),
            ("filter_order", self.filter_order.to_string()),
            ("search_low_hz", format_f64(self.search_low_hz)),
            ("search_high_hz", format_f64(self.search_high_hz)),
            ("continuity_bpm", format_f64(self.continuity_bpm)),
            ("pad_factor", self.pad_factor.to_string()),
            ("window_fn", self.window_fn.to_string()),
        ]
    }
}

/// Shortest decimal form that parses back to the same f64.
pub(crate) fn format_f64(v: f64) -> String {
    let mut s = format!("{v}");
    if !s.contains(['.', 'e', 'n', 'i']) {
        s.push_str(".0");
    }
    s
}
