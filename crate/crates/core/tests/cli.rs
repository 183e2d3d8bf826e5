mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use vigil::cli::exit;
use vigil::output::{read_jsonl, Record};

fn vigil(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vigil"))
        .args(args)
        .env("VIGIL_LOG", "off")
        .output()
        .expect("spawn vigil")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Runs `generate` on a bundled fixture; returns the CSV and labels paths.
fn generate(fixture: &str, dir: &Path) -> (PathBuf, PathBuf) {
    let o = vigil(&["generate", "--input", s(&common::fixture(fixture)), "--out-dir", s(dir)]);
    assert!(o.status.success(), "{}", stderr(&o));
    vigil::cli::generated_paths(&common::fixture(fixture), dir)
}

#[test]
fn missing_input_is_an_io_error() {
    let o = vigil(&["analyze", "--input", "/no/such/file.csv", "--rate", "500"]);
    assert_eq!(o.status.code(), Some(exit::IO));
    assert!(stderr(&o).contains("/no/such/file.csv"), "{}", stderr(&o));
}

#[test]
fn malformed_csv_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    fs::write(&csv, "1.0\n2.0\nabc\n").unwrap();
    let o = vigil(&["analyze", "--input", s(&csv), "--rate", "500", "--out-dir", s(dir.path())]);
    assert_eq!(o.status.code(), Some(exit::PARSE));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn bad_usage_exits_with_usage_code() {
    assert_eq!(vigil(&["analyze"]).status.code(), Some(exit::USAGE));
    assert_eq!(vigil(&["frobnicate"]).status.code(), Some(exit::USAGE));
}

#[test]
fn invalid_scenario_names_the_entry() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.scenario");
    fs::write(
        &path,
        "duration_s = 10\nsample_rate = 250\nalpha = 2.0, 1.0, 10.0, 20.0\n",
    )
    .unwrap();
    let o = vigil(&["generate", "--input", s(&path), "--out-dir", s(dir.path())]);
    assert_eq!(o.status.code(), Some(exit::VALIDATION));
    assert!(stderr(&o).contains("alpha"), "{}", stderr(&o));
    assert!(stderr(&o).contains("frequency"), "{}", stderr(&o));
}

#[test]
fn generate_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (csv_a, labels_a) = generate("artifact_spikes.scenario", a.path());
    let (csv_b, labels_b) = generate("artifact_spikes.scenario", b.path());
    assert_eq!(fs::read(csv_a).unwrap(), fs::read(csv_b).unwrap());
    assert_eq!(fs::read(labels_a).unwrap(), fs::read(labels_b).unwrap());
}

#[test]
fn background_only_summary() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, _) = generate("baseline_only.scenario", dir.path());
    let out = dir.path().join("out");
    let o = vigil(&["analyze", "--input", s(&csv), "--rate", "500", "--out-dir", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = stdout(&o);
    assert!(summary.contains("blinks=0 alpha_bursts=0 sustained_alpha=0"), "{summary}");
    assert!(summary.contains("max_level=0"), "{summary}");
}

#[test]
fn episode_transitions_visit_levels_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, _) = generate("drowsiness_episode.scenario", dir.path());
    let out = dir.path().join("out");
    let o = vigil(&["analyze", "--input", s(&csv), "--rate", "500", "--out-dir", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut reached = Vec::new();
    for r in read_jsonl(out.join("transitions.jsonl")).unwrap() {
        if let Record::Alarm { from, to, .. } = r {
            if to > from {
                reached.push(to);
            }
        }
    }
    assert_eq!(&reached[..3], &[1, 2, 3]);
}

#[test]
fn emit_flags_select_files() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, _) = generate("short_2s.scenario", dir.path());
    let out = dir.path().join("out");
    let o = vigil(&[
        "analyze", "--input", s(&csv), "--rate", "500", "--out-dir", s(&out), "--emit-events",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, ["events.jsonl", "run.json"]);
}

#[test]
fn score_against_own_labels_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let (_, labels) = generate("drowsiness_episode.scenario", dir.path());
    let fake = dir.path().join("fake");
    fs::create_dir(&fake).unwrap();
    fs::copy(&labels, fake.join("events.jsonl")).unwrap();
    let o = vigil(&["score", "--input", s(&fake), "--truth", s(&labels)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for kind in ["blink", "alpha_burst", "sustained_alpha"] {
        assert_eq!(report[kind]["precision"], 1.0, "{kind}");
        assert_eq!(report[kind]["recall"], 1.0, "{kind}");
    }
    assert_eq!(report["alarm_agreement"], 1.0);
    assert_eq!(report["synthetic_only"], true);
}

#[test]
fn zero_speed_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, _) = generate("short_2s.scenario", dir.path());
    let o = vigil(&["simulate", "--input", s(&csv), "--rate", "500", "--speed", "0", "--out-dir", s(dir.path())]);
    assert_eq!(o.status.code(), Some(exit::VALIDATION));
    assert!(stderr(&o).contains("speed"), "{}", stderr(&o));
}

#[test]
fn real_time_playback_takes_the_signal_duration() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, _) = generate("short_2s.scenario", dir.path());
    let start = Instant::now();
    let o = vigil(&["simulate", "--input", s(&csv), "--rate", "500", "--out-dir", s(&dir.path().join("o"))]);
    let elapsed = start.elapsed().as_secs_f64();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!((elapsed - 2.0).abs() <= 0.4, "{elapsed}");
}

#[test]
fn fast_playback_of_a_minute_matches_batch() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, _) = generate("baseline_only.scenario", dir.path());
    let (batch, live) = (dir.path().join("batch"), dir.path().join("live"));
    assert!(vigil(&["analyze", "--input", s(&csv), "--rate", "500", "--out-dir", s(&batch)]).status.success());
    let start = Instant::now();
    let o = vigil(&["simulate", "--input", s(&csv), "--rate", "500", "--speed", "1000", "--out-dir", s(&live)]);
    let elapsed = start.elapsed().as_secs_f64();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(elapsed < 1.0, "{elapsed}");
    for name in ["events.jsonl", "transitions.jsonl", "frames.csv", "run.json"] {
        assert_eq!(fs::read(batch.join(name)).unwrap(), fs::read(live.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn short_recording_cannot_calibrate() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, _) = generate("short_2s.scenario", dir.path());
    let o = vigil(&["calibrate", "--input", s(&csv), "--rate", "500"]);
    assert_eq!(o.status.code(), Some(exit::CALIBRATION));
    let o = vigil(&["analyze", "--input", s(&csv), "--rate", "500", "--out-dir", s(&dir.path().join("o"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("alpha=uncalibrated"), "{}", stdout(&o));
}

#[test]
fn calibrate_reports_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, _) = generate("baseline_only.scenario", dir.path());
    let o = vigil(&["calibrate", "--input", s(&csv), "--rate", "500"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let b = report["baseline_relative_alpha"].as_f64().unwrap();
    assert!(b > 0.05 && b < 0.35, "{b}");
    let threshold = report["alpha_threshold"].as_f64().unwrap();
    assert!((threshold - (2.0 * b).max(0.35)).abs() < 1e-12);
}

#[test]
fn config_file_errors_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, _) = generate("short_2s.scenario", dir.path());
    let cfg = dir.path().join("vigil.conf");
    fs::write(&cfg, "alpha.no_such_key = 1\n").unwrap();
    let o = vigil(&["analyze", "--input", s(&csv), "--config", s(&cfg), "--out-dir", s(dir.path())]);
    assert_eq!(o.status.code(), Some(exit::PARSE));
    assert!(stderr(&o).contains("alpha.no_such_key"), "{}", stderr(&o));
    fs::write(&cfg, "alpha.absolute_floor = 1.5\n").unwrap();
    let o = vigil(&["analyze", "--input", s(&csv), "--config", s(&cfg), "--out-dir", s(dir.path())]);
    assert_eq!(o.status.code(), Some(exit::VALIDATION));
    assert!(stderr(&o).contains("alpha.absolute_floor"), "{}", stderr(&o));

    // a higher blink threshold suppresses the fixture's single 180 µV blink
    fs::write(&cfg, "blink.amplitude_threshold_uv = 400\n").unwrap();
    let o = vigil(&["analyze", "--input", s(&csv), "--rate", "500", "--config", s(&cfg), "--out-dir", s(&dir.path().join("o"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("blinks=0"), "{}", stdout(&o));
}
