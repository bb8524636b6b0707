//! Command-line front end for the heart-rate estimation library.
//!
//! Four subcommands cover the batch workflow: `estimate` runs the pipeline
//! over a recording, `evaluate` scores an estimates file against a beat
//! annotation, `synth` builds a synthetic corpus, and `dump` writes
//! per-frame envelopes and spectra for inspection. Every run is
//! deterministic given its inputs.
//!
//! Exit codes: 0 success, 2 unreadable or invalid input/config, 3 frames
//! that cannot be paired or scored, 4 output that cannot be written.
//! Failures print a one-line JSON object to stderr with a stable `error`
//! label and a human-readable `message`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bcg_hr::config::PipelineConfig;
use bcg_hr::io::{load_annotation, load_recording, RecordingFormat};
use bcg_hr::metrics::{self, PairedSeries};
use bcg_hr::synth::{make_corpus, CorpusSpec};
use bcg_hr::tracker::{
    estimate_hr, estimate_hr_detailed, read_estimates, write_estimates_csv, write_estimates_json,
    EstimateDoc,
};
use bcg_hr::Error;

#[derive(Parser)]
#[command(
    name = "bcg-hr",
    version,
    about = "Heart-rate estimation from ballistocardiogram recordings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate per-frame heart rate from a recording
    Estimate(EstimateArgs),
    /// Score an estimates file against a beat annotation
    Evaluate(EvaluateArgs),
    /// Generate a synthetic corpus from a spec file
    Synth(SynthArgs),
    /// Write per-frame envelopes and spectra next to the estimates
    Dump(DumpArgs),
}

#[derive(Args)]
struct EstimateArgs {
    /// Input recording, .csv or .wav
    #[arg(long)]
    input: PathBuf,
    /// Estimates file to write
    #[arg(long)]
    out: PathBuf,
    /// Output format
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Estimates file produced by `estimate` (.csv or .json)
    #[arg(long)]
    estimates: PathBuf,
    /// Beat annotation, one timestamp per line
    #[arg(long)]
    annotation: PathBuf,
    /// Metrics report (JSON) to write; scatter CSVs are written next to it
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Corpus description, one key=value block per recording
    #[arg(long)]
    spec: PathBuf,
    /// Directory receiving one recording CSV and one .beats file per block
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct DumpArgs {
    /// Input recording, .csv or .wav
    #[arg(long)]
    input: PathBuf,
    /// Directory receiving per-frame dump files
    #[arg(long)]
    out_dir: PathBuf,
    /// Write envelope_NNN.csv files (default: both kinds)
    #[arg(long)]
    dump_envelope: bool,
    /// Write spectrum_NNN.csv files (default: both kinds)
    #[arg(long)]
    dump_spectrum: bool,
    #[command(flatten)]
    config: ConfigArgs,
}

/// Pipeline settings: an optional config file plus per-field overrides,
/// applied in that order.
#[derive(Args)]
struct ConfigArgs {
    /// Config file of key=value lines; flags below override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Analysis window length, seconds
    #[arg(long)]
    window_s: Option<f64>,
    /// Frame advance, seconds
    #[arg(long)]
    hop_s: Option<f64>,
    /// Band-pass corner frequencies as lo:hi, Hz
    #[arg(long)]
    band: Option<String>,
    /// Spectral search band as lo:hi, Hz
    #[arg(long)]
    search: Option<String>,
    /// Frame-to-frame continuity limit, BPM
    #[arg(long)]
    continuity_bpm: Option<f64>,
    /// FFT zero-padding factor
    #[arg(long)]
    pad_factor: Option<usize>,
    /// Analysis window: hann or rectangular
    #[arg(long)]
    window_fn: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

/// A failed command: the exit code, a stable machine-readable label, and
/// the human-readable explanation.
struct Failure {
    code: u8,
    label: &'static str,
    message: String,
}

/// Input-stage problems: missing or malformed recordings, annotations,
/// estimates files, corpus specs, and configuration.
fn input_failure(err: Error) -> Failure {
    let label = match &err {
        Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => "input-not-found",
        Error::Io(_) => "input-unreadable",
        Error::Parse { .. } => "input-parse",
        Error::Config(_) | Error::EmptyBand { .. } => "config-invalid",
        _ => "input-invalid",
    };
    Failure {
        code: 2,
        label,
        message: err.to_string(),
    }
}

/// Scoring-stage problems: frames that cannot be paired with the
/// annotation, or statistics undefined for the paired data.
fn pairing_failure(err: Error) -> Failure {
    let label = match &err {
        Error::Undefined(_) => "metrics-undefined",
        _ => "pairing-mismatch",
    };
    Failure {
        code: 3,
        label,
        message: err.to_string(),
    }
}

fn output_failure(err: Error) -> Failure {
    Failure {
        code: 4,
        label: "output-failed",
        message: err.to_string(),
    }
}

/// Fails early with `input-not-found` so the label does not depend on how
/// a particular reader reports a missing file.
fn require_exists(path: &Path) -> Result<(), Failure> {
    if path.exists() {
        Ok(())
    } else {
        Err(Failure {
            code: 2,
            label: "input-not-found",
            message: format!("no such file: {}", path.display()),
        })
    }
}

fn parse_pair(text: &str, flag: &str) -> Result<(f64, f64), Error> {
    let parsed = text.split_once(':').and_then(|(lo, hi)| {
        match (lo.trim().parse::<f64>(), hi.trim().parse::<f64>()) {
            (Ok(lo), Ok(hi)) => Some((lo, hi)),
            _ => None,
        }
    });
    parsed.ok_or_else(|| {
        Error::Config(format!(
            "--{flag} expects two numbers as lo:hi, got \"{text}\""
        ))
    })
}

fn build_config(args: &ConfigArgs) -> Result<PipelineConfig, Error> {
    let mut config = match &args.config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(v) = args.window_s {
        config.window_s = v;
    }
    if let Some(v) = args.hop_s {
        config.hop_s = v;
    }
    if let Some(text) = &args.band {
        (config.band_low_hz, config.band_high_hz) = parse_pair(text, "band")?;
    }
    if let Some(text) = &args.search {
        (config.search_low_hz, config.search_high_hz) = parse_pair(text, "search")?;
    }
    if let Some(v) = args.continuity_bpm {
        config.continuity_bpm = v;
    }
    if let Some(v) = args.pad_factor {
        config.pad_factor = v;
    }
    if let Some(text) = &args.window_fn {
        config.window_fn = text.trim().parse()?;
    }
    Ok(config)
}

fn create_output(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| output_failure(e.into()))
}

fn finish_output(mut w: BufWriter<File>) -> Result<(), Failure> {
    w.flush().map_err(|e| output_failure(e.into()))
}

fn cmd_estimate(args: &EstimateArgs) -> Result<(), Failure> {
    require_exists(&args.input)?;
    let format = RecordingFormat::from_path(&args.input).map_err(input_failure)?;
    let recording = load_recording(&args.input, format).map_err(input_failure)?;
    let config = build_config(&args.config).map_err(input_failure)?;
    config
        .validate(recording.sample_rate_hz())
        .map_err(input_failure)?;
    let frames = estimate_hr(&recording, &config).map_err(input_failure)?;
    let doc = EstimateDoc {
        config,
        sample_rate_hz: recording.sample_rate_hz(),
        label: recording.label().to_string(),
        frames,
    };

    let mut w = create_output(&args.out)?;
    match args.format {
        OutputFormat::Csv => write_estimates_csv(&doc, &mut w),
        OutputFormat::Json => write_estimates_json(&doc, &mut w),
    }
    .map_err(output_failure)?;
    finish_output(w)?;
    println!(
        "wrote {} frame estimates to {}",
        doc.frames.len(),
        args.out.display()
    );
    Ok(())
}

/// Derives a sibling path like `report_hr_scatter.csv` from `report.json`.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("report");
    out.with_file_name(format!("{stem}_{suffix}.csv"))
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), Failure> {
    require_exists(&args.estimates)?;
    require_exists(&args.annotation)?;
    let doc = read_estimates(&args.estimates).map_err(input_failure)?;
    let annotation = load_annotation(&args.annotation).map_err(input_failure)?;

    if doc.frames.is_empty() {
        return Err(pairing_failure(Error::Pairing(format!(
            "{} contains no frames to score",
            args.estimates.display()
        ))));
    }
    let spans: Vec<(f64, f64)> = doc
        .frames
        .iter()
        .map(|e| (e.frame_start_s, e.frame_start_s + doc.config.window_s))
        .collect();
    let reference = metrics::reference_hr(&annotation, &spans).map_err(pairing_failure)?;
    let estimated: Vec<f64> = doc.frames.iter().map(|e| e.hr_bpm).collect();
    let times: Vec<f64> = doc.frames.iter().map(|e| e.frame_start_s).collect();
    let pairs = PairedSeries::new(reference, estimated, times).map_err(pairing_failure)?;
    let report = metrics::report(&pairs).map_err(pairing_failure)?;
    let scatter = metrics::bland_altman(&pairs);

    let mut w = create_output(&args.out)?;
    serde_json::to_writer_pretty(&mut w, &report)
        .map_err(|e| output_failure(Error::Validation(format!("serializing report: {e}"))))?;
    writeln!(w).map_err(|e| output_failure(e.into()))?;
    finish_output(w)?;

    let mut w = create_output(&sibling(&args.out, "hr_scatter"))?;
    writeln!(w, "frame_time_s,reference_bpm,estimate_bpm").map_err(|e| output_failure(e.into()))?;
    for ((t, r), e) in pairs
        .frame_times_s()
        .iter()
        .zip(pairs.reference_bpm())
        .zip(pairs.estimate_bpm())
    {
        writeln!(w, "{t},{r},{e}").map_err(|e| output_failure(e.into()))?;
    }
    finish_output(w)?;

    let mut w = create_output(&sibling(&args.out, "bland_altman"))?;
    writeln!(w, "frame_time_s,mean_bpm,abs_diff_bpm").map_err(|e| output_failure(e.into()))?;
    for ((t, m), d) in pairs
        .frame_times_s()
        .iter()
        .zip(&scatter.means_bpm)
        .zip(&scatter.abs_diffs_bpm)
    {
        writeln!(w, "{t},{m},{d}").map_err(|e| output_failure(e.into()))?;
    }
    finish_output(w)?;

    println!(
        "MAE {:.3} BPM, STD {:.3} BPM, r {:.4} over {} frames",
        report.mae_bpm, report.std_abs_err_bpm, report.pearson_r, report.n_frames
    );
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<(), Failure> {
    require_exists(&args.spec)?;
    let spec = CorpusSpec::load(&args.spec).map_err(input_failure)?;
    let files = make_corpus(&spec, &args.out_dir).map_err(|e| match e {
        Error::Io(_) => output_failure(e),
        other => input_failure(other),
    })?;
    println!(
        "wrote {} recordings to {}",
        files.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn cmd_dump(args: &DumpArgs) -> Result<(), Failure> {
    require_exists(&args.input)?;
    let format = RecordingFormat::from_path(&args.input).map_err(input_failure)?;
    let recording = load_recording(&args.input, format).map_err(input_failure)?;
    let config = build_config(&args.config).map_err(input_failure)?;
    config
        .validate(recording.sample_rate_hz())
        .map_err(input_failure)?;

    let both = !args.dump_envelope && !args.dump_spectrum;
    let want_env = args.dump_envelope || both;
    let want_spec = args.dump_spectrum || both;
    let run = estimate_hr_detailed(&recording, &config, want_env, want_spec)
        .map_err(input_failure)?;

    std::fs::create_dir_all(&args.out_dir).map_err(|e| output_failure(e.into()))?;
    let mut written = 0usize;
    if let Some(envelopes) = &run.envelopes {
        for (est, env) in run.estimates.iter().zip(envelopes) {
            let path = args
                .out_dir
                .join(format!("envelope_{:03}.csv", est.frame_index));
            let mut w = create_output(&path)?;
            writeln!(w, "# frame_index={}", est.frame_index)
                .and_then(|_| writeln!(w, "# frame_start_s={}", est.frame_start_s))
                .and_then(|_| writeln!(w, "sample_index,value"))
                .map_err(|e| output_failure(e.into()))?;
            for (i, v) in env.iter().enumerate() {
                writeln!(w, "{i},{v}").map_err(|e| output_failure(e.into()))?;
            }
            finish_output(w)?;
            written += 1;
        }
    }
    if let Some(spectra) = &run.spectra {
        for (est, spectrum) in run.estimates.iter().zip(spectra) {
            let path = args
                .out_dir
                .join(format!("spectrum_{:03}.csv", est.frame_index));
            let mut w = create_output(&path)?;
            writeln!(w, "# frame_index={}", est.frame_index)
                .and_then(|_| writeln!(w, "# frame_start_s={}", spectrum.frame_time_s))
                .and_then(|_| writeln!(w, "# bin_spacing_hz={}", spectrum.bin_spacing_hz))
                .and_then(|_| writeln!(w, "# fft_length={}", spectrum.fft_length))
                .and_then(|_| writeln!(w, "frequency_hz,magnitude,phase_rad"))
                .map_err(|e| output_failure(e.into()))?;
            for (k, c) in spectrum.bins.iter().enumerate() {
                let f = k as f64 * spectrum.bin_spacing_hz;
                writeln!(w, "{f},{},{}", c.norm(), c.arg())
                    .map_err(|e| output_failure(e.into()))?;
            }
            finish_output(w)?;
            written += 1;
        }
    }
    println!("wrote {written} dump files to {}", args.out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Estimate(args) => cmd_estimate(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Dump(args) => cmd_dump(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!(
                "{}",
                serde_json::json!({
                    "error": failure.label,
                    "message": failure.message,
                })
            );
            ExitCode::from(failure.code)
        }
    }
}
