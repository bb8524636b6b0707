//! End-to-end tests for the `bcg-hr` binary: each one runs the compiled
//! executable against files in a temp directory and checks the exit code,
//! the streams, and the files left behind.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bcg_hr::config::PipelineConfig;
use bcg_hr::io::{save_annotation, save_recording_csv};
use bcg_hr::metrics;
use bcg_hr::synth::{generate_bcg, HrProfile, SignalModelParams};
use bcg_hr::tracker::{read_estimates, write_estimates_csv, EstimateDoc, FrameFlag, HrEstimate};
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcg-hr"))
        .args(args)
        .output()
        .expect("binary should launch")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no exit code (killed by signal?)")
}

fn stderr_error_label(out: &Output) -> String {
    let text = String::from_utf8_lossy(&out.stderr);
    let parsed: serde_json::Value = serde_json::from_str(text.trim())
        .unwrap_or_else(|e| panic!("stderr is not one JSON object ({e}): {text}"));
    parsed["error"]
        .as_str()
        .unwrap_or_else(|| panic!("no error label in {text}"))
        .to_string()
}

/// A clean 60 s constant-rate recording; wide pulses keep the envelope
/// fundamental dominant so every frame should land within 2 BPM.
fn write_recording_72bpm(dir: &Path) -> PathBuf {
    let params = SignalModelParams {
        label: "cli72".into(),
        hr_profile: HrProfile::constant(72.0),
        duration_s: 60.0,
        pulse_width_s: 0.35,
        noise_std: 0.05,
        seed: 7,
        ..SignalModelParams::default()
    };
    let (recording, _) = generate_bcg(&params).unwrap();
    let path = dir.join("rec72.csv");
    save_recording_csv(&recording, &path).unwrap();
    path
}

#[test]
fn estimate_writes_expected_frames() {
    let dir = TempDir::new().unwrap();
    let input = write_recording_72bpm(dir.path());
    let out = dir.path().join("est.csv");

    let result = run(&[
        "estimate",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&result), 0, "stderr: {}", String::from_utf8_lossy(&result.stderr));

    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("# window_s=30.0"), "defaults not echoed:\n{text}");
    assert!(text.contains("# hop_s=15.0"), "defaults not echoed:\n{text}");

    let rows: Vec<&str> = text
        .lines()
        .skip_while(|l| l.starts_with('#'))
        .skip(1)
        .collect();
    assert_eq!(rows.len(), 3, "60 s at 30 s windows / 15 s hop is 3 frames");
    for row in rows {
        let hr: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
        assert!((hr - 72.0).abs() < 2.0, "estimate {hr} too far from 72");
    }
}

#[test]
fn estimate_missing_input_exits_2() {
    let dir = TempDir::new().unwrap();
    let result = run(&[
        "estimate",
        "--input",
        dir.path().join("absent.csv").to_str().unwrap(),
        "--out",
        dir.path().join("est.csv").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&result), 2);
    assert_eq!(stderr_error_label(&result), "input-not-found");
}

#[test]
fn estimate_json_format_round_trips() {
    let dir = TempDir::new().unwrap();
    let input = write_recording_72bpm(dir.path());
    let out = dir.path().join("est.json");

    let result = run(&[
        "estimate",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(exit_code(&result), 0, "stderr: {}", String::from_utf8_lossy(&result.stderr));

    let doc = read_estimates(&out).unwrap();
    assert_eq!(doc.frames.len(), 3);
    // Recording labels come from the file stem on load.
    assert_eq!(doc.label, "rec72");
}

#[test]
fn estimate_flag_overrides_config_file() {
    let dir = TempDir::new().unwrap();
    let input = write_recording_72bpm(dir.path());
    let cfg = dir.path().join("pipeline.cfg");
    fs::write(&cfg, "window_s = 20\nhop_s = 10\n").unwrap();
    let out = dir.path().join("est.csv");

    let result = run(&[
        "estimate",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--window-s",
        "30",
    ]);
    assert_eq!(exit_code(&result), 0, "stderr: {}", String::from_utf8_lossy(&result.stderr));

    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("# window_s=30.0"), "flag should beat config file:\n{text}");
    assert!(text.contains("# hop_s=10.0"), "config file value should survive:\n{text}");
}

/// Builds an estimates file whose rates are exactly the annotation-derived
/// reference for each frame, so evaluation must report zero error.
#[test]
fn evaluate_perfect_estimates_score_zero_error() {
    let dir = TempDir::new().unwrap();
    let params = SignalModelParams {
        label: "ramp".into(),
        hr_profile: HrProfile::new(vec![(0.0, 60.0), (120.0, 80.0)]).unwrap(),
        duration_s: 120.0,
        seed: 11,
        ..SignalModelParams::default()
    };
    let (recording, beats) = generate_bcg(&params).unwrap();
    let ann_path = dir.path().join("ramp.beats");
    save_annotation(&beats, &ann_path).unwrap();

    let config = PipelineConfig::default();
    let spans: Vec<(f64, f64)> = (0..7)
        .map(|k| {
            let start = k as f64 * config.hop_s;
            (start, start + config.window_s)
        })
        .collect();
    let reference = metrics::reference_hr(&beats, &spans).unwrap();
    let frames: Vec<HrEstimate> = reference
        .iter()
        .enumerate()
        .map(|(k, &bpm)| HrEstimate {
            frame_index: k,
            frame_start_s: spans[k].0,
            f_i_hz: bpm / 60.0,
            f_r_hz: bpm / 60.0,
            hr_bpm: bpm,
            search_band_hz: (config.search_low_hz, config.search_high_hz),
            flag: FrameFlag::Ok,
        })
        .collect();
    let doc = EstimateDoc {
        config,
        sample_rate_hz: recording.sample_rate_hz(),
        label: "ramp".into(),
        frames,
    };
    let est_path = dir.path().join("ramp_est.csv");
    let mut file = fs::File::create(&est_path).unwrap();
    write_estimates_csv(&doc, &mut file).unwrap();
    drop(file);

    let report_path = dir.path().join("report.json");
    let result = run(&[
        "evaluate",
        "--estimates",
        est_path.to_str().unwrap(),
        "--annotation",
        ann_path.to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&result), 0, "stderr: {}", String::from_utf8_lossy(&result.stderr));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["n_frames"], 7);
    assert_eq!(report["mae_bpm"].as_f64().unwrap(), 0.0);
    assert!((report["pearson_r"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    for suffix in ["report_hr_scatter.csv", "report_bland_altman.csv"] {
        let text = fs::read_to_string(dir.path().join(suffix)).unwrap();
        assert_eq!(text.lines().count(), 8, "{suffix} should hold 1 header + 7 rows");
    }
}

#[test]
fn evaluate_short_annotation_exits_3() {
    let dir = TempDir::new().unwrap();
    let input = write_recording_72bpm(dir.path());
    let est_path = dir.path().join("est.csv");
    let result = run(&[
        "estimate",
        "--input",
        input.to_str().unwrap(),
        "--out",
        est_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&result), 0);

    // Beats only in the first few seconds: later frames span no beats.
    let ann_path = dir.path().join("short.beats");
    fs::write(&ann_path, "0.5\n1.3\n2.1\n").unwrap();

    let result = run(&[
        "evaluate",
        "--estimates",
        est_path.to_str().unwrap(),
        "--annotation",
        ann_path.to_str().unwrap(),
        "--out",
        dir.path().join("report.json").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&result), 3);
    assert_eq!(stderr_error_label(&result), "pairing-mismatch");
}

#[test]
fn synth_empty_spec_writes_nothing() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("empty.spec");
    fs::write(&spec, "").unwrap();
    let out_dir = dir.path().join("corpus");

    let result = run(&[
        "synth",
        "--spec",
        spec.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&result), 0, "stderr: {}", String::from_utf8_lossy(&result.stderr));
    assert!(String::from_utf8_lossy(&result.stdout).contains("wrote 0 recordings"));
    assert_eq!(fs::read_dir(&out_dir).unwrap().count(), 0);
}

#[test]
fn synth_writes_recording_and_annotation_pairs() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("two.spec");
    fs::write(
        &spec,
        "label = a\nhr_bpm = 65\nduration_s = 40\nseed = 1\n\n\
         label = b\nhr_bpm = 0:70, 40:80\nduration_s = 40\nseed = 2\n",
    )
    .unwrap();
    let out_dir = dir.path().join("corpus");

    let result = run(&[
        "synth",
        "--spec",
        spec.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&result), 0, "stderr: {}", String::from_utf8_lossy(&result.stderr));
    for name in ["a.csv", "a.beats", "b.csv", "b.beats"] {
        assert!(out_dir.join(name).is_file(), "{name} missing");
    }
    assert_eq!(fs::read_dir(&out_dir).unwrap().count(), 4);
}

#[test]
fn synth_unwritable_out_dir_exits_4() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("one.spec");
    fs::write(&spec, "label = a\nhr_bpm = 65\nduration_s = 40\n").unwrap();
    // A plain file where the directory should go.
    let blocker = dir.path().join("corpus");
    fs::write(&blocker, "occupied").unwrap();

    let result = run(&[
        "synth",
        "--spec",
        spec.to_str().unwrap(),
        "--out-dir",
        blocker.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&result), 4);
    assert_eq!(stderr_error_label(&result), "output-failed");
}

#[test]
fn dump_writes_envelope_and_spectrum_per_frame() {
    let dir = TempDir::new().unwrap();
    let params = SignalModelParams {
        label: "short".into(),
        duration_s: 30.0,
        seed: 3,
        ..SignalModelParams::default()
    };
    let (recording, _) = generate_bcg(&params).unwrap();
    let input = dir.path().join("short.csv");
    save_recording_csv(&recording, &input).unwrap();
    let out_dir = dir.path().join("dump");

    let result = run(&[
        "dump",
        "--input",
        input.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--pad-factor",
        "1",
    ]);
    assert_eq!(exit_code(&result), 0, "stderr: {}", String::from_utf8_lossy(&result.stderr));

    // One 30 s frame at 225 Hz: 6750 envelope samples, 6750/2 + 1 bins.
    let env = fs::read_to_string(out_dir.join("envelope_000.csv")).unwrap();
    assert_eq!(env.lines().count(), 2 + 1 + 6750);
    assert!(env.starts_with("# frame_index=0\n"));
    let spec = fs::read_to_string(out_dir.join("spectrum_000.csv")).unwrap();
    assert_eq!(spec.lines().count(), 4 + 1 + 3376);
    assert!(spec.contains("# fft_length=6750\n"));
    assert_eq!(fs::read_dir(&out_dir).unwrap().count(), 2);
}

#[test]
fn dump_envelope_only_skips_spectra() {
    let dir = TempDir::new().unwrap();
    let input = write_recording_72bpm(dir.path());
    let out_dir = dir.path().join("dump");

    let result = run(&[
        "dump",
        "--input",
        input.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--dump-envelope",
    ]);
    assert_eq!(exit_code(&result), 0, "stderr: {}", String::from_utf8_lossy(&result.stderr));
    // 60 s input: frames 000..002, envelopes only.
    assert_eq!(fs::read_dir(&out_dir).unwrap().count(), 3);
    assert!(out_dir.join("envelope_002.csv").is_file());
    assert!(!out_dir.join("spectrum_000.csv").exists());
}

#[test]
fn bad_band_flag_is_config_invalid() {
    let dir = TempDir::new().unwrap();
    let input = write_recording_72bpm(dir.path());
    let result = run(&[
        "estimate",
        "--input",
        input.to_str().unwrap(),
        "--out",
        dir.path().join("est.csv").to_str().unwrap(),
        "--band",
        "0.7-10",
    ]);
    assert_eq!(exit_code(&result), 2);
    assert_eq!(stderr_error_label(&result), "config-invalid");
}
