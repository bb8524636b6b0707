//! Heart-rate estimation from ballistocardiogram (BCG) recordings.
//!
//! A BCG records the body's mechanical recoil from each heart beat. The
//! cardiac content rides as short oscillatory pulses on top of a much
//! stronger respiratory swing, so the rate cannot be read off the raw
//! spectrum directly. This crate estimates it per analysis frame with the
//! following chain:
//!
//! 1. zero-phase Butterworth band-pass to drop respiration and drift
//!    ([`filter`]),
//! 2. analytic-signal envelope power, which demodulates the pulse train
//!    off its carrier ([`envelope`]),
//! 3. windowed, zero-padded FFT of the mean-removed envelope and an
//!    in-band peak pick ([`spectrum`]),
//! 4. phase-vocoder refinement of the peak frequency across frames, which
//!    recovers precision far beyond the bin spacing ([`spectrum`]),
//! 5. frame-to-frame tracking with a continuity-limited search band
//!    ([`tracker`]).
//!
//! [`synth`] generates recordings with exact beat annotations for testing,
//! and [`metrics`] scores estimates against such references. [`io`] holds
//! the container types and file formats, [`config`] the tunable
//! parameters.
//!
//! ```
//! use bcg_hr::config::PipelineConfig;
//! use bcg_hr::synth::{generate_bcg, HrProfile, SignalModelParams};
//! use bcg_hr::tracker::estimate_hr;
//!
//! let params = SignalModelParams {
//!     hr_profile: HrProfile::constant(72.0),
//!     duration_s: 120.0,
//!     ..SignalModelParams::default()
//! };
//! let (recording, _beats) = generate_bcg(&params).unwrap();
//! let estimates = estimate_hr(&recording, &PipelineConfig::default()).unwrap();
//! assert!((estimates[0].hr_bpm - 72.0).abs() < 2.0);
//! ```

pub mod config;
pub mod envelope;
pub mod error;
pub mod filter;
pub mod io;
pub mod metrics;
pub mod spectrum;
pub mod synth;
pub mod tracker;

pub use config::{PipelineConfig, WindowFn};
pub use error::{Error, Result};
pub use io::{Recording, ReferenceAnnotation};
pub use tracker::{estimate_hr, HrEstimate};
