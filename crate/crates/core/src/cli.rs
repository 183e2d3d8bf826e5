//! Command-line front end.

use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::alarm::{blink_baseline, TimelineTiming};
use crate::alpha::{calibrate_baseline, AlphaKind};
use crate::blink::detect_blinks;
use crate::config::AnalysisConfig;
use crate::dsp::compute_band_power_frames;
use crate::error::{Error, Result};
use crate::output::{self, Record};
use crate::pipeline::{analyze, preprocess, Analysis, StreamEvent, StreamingPipeline};
use crate::score::{score, EventSets};
use crate::signal_io::{generate_synthetic, read_csv, samples_for, write_csv, SyntheticScenario};

/// Exit status for each error class.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const IO: i32 = 3;
    pub const PARSE: i32 = 4;
    pub const VALIDATION: i32 = 5;
    pub const CALIBRATION: i32 = 6;
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => exit::IO,
        Error::EmptyInput | Error::Parse { .. } | Error::TimestampSpacing { .. } => exit::PARSE,
        Error::InsufficientCalibration { .. } => exit::CALIBRATION,
        Error::Invalid { .. }
        | Error::RateMismatch { .. }
        | Error::UnsortedFrames { .. }
        | Error::TimeRegression { .. } => exit::VALIDATION,
    }
}

#[derive(Debug, Parser)]
#[command(name = "vigil", version, about = "EEG drowsiness detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full pipeline over a recorded CSV file.
    Analyze(AnalyzeArgs),
    /// Render a scenario file into a signal CSV and a labels file.
    Generate(GenerateArgs),
    /// Score an analysis output directory against a labels file.
    Score(ScoreArgs),
    /// Replay a CSV file through the streaming pipeline.
    Simulate(SimulateArgs),
    /// Report the baselines measured over the calibration span.
    Calibrate(InputArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Signal CSV, one amplitude (µV) per row or `time_s,amplitude_uv` rows.
    #[arg(long)]
    pub input: PathBuf,
    /// Sampling rate of the input in Hz; overrides the config file.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Analysis config file (`key = value` lines).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, default_value = "vigil-out")]
    pub out_dir: PathBuf,
    /// Write events.jsonl.
    #[arg(long)]
    pub emit_events: bool,
    /// Write frames.csv and spectra.csv.
    #[arg(long)]
    pub emit_frames: bool,
    /// Write transitions.jsonl.
    #[arg(long)]
    pub emit_transitions: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Scenario file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Output directory of an analyze or simulate run.
    #[arg(long)]
    pub input: PathBuf,
    /// Labels file written by `generate`.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, default_value_t = 0.25)]
    pub tolerance_s: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Playback speed as a multiple of real time.
    #[arg(long, default_value_t = 1.0)]
    pub speed: f64,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Generate(g) => cmd_generate(&g),
        Command::Score(s) => cmd_score(&s),
        Command::Simulate(s) => cmd_simulate(&s),
        Command::Calibrate(c) => cmd_calibrate(&c),
    }
}

fn load(args: &InputArgs) -> Result<(AnalysisConfig, crate::signal_io::SampleStream)> {
    let mut config = match &args.config {
        Some(path) => AnalysisConfig::load(path)?,
        None => AnalysisConfig::default(),
    };
    if let Some(rate) = args.rate {
        config.input_rate_hz = rate;
    }
    config.validate()?;
    let stream = read_csv(&args.input, config.input_rate_hz)?;
    log::info!(
        "read {} samples at {} Hz from {}",
        stream.len(),
        stream.sample_rate(),
        args.input.display()
    );
    Ok((config, stream))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the selected outputs; with no selection, everything is written.
pub fn write_outputs(analysis: &Analysis, out: &OutputArgs) -> Result<()> {
    let all = !(out.emit_events || out.emit_frames || out.emit_transitions);
    let dir = &out.out_dir;
    create_dir(dir)?;
    if all || out.emit_events {
        let records = output::event_records(&analysis.blinks, &analysis.alpha_events);
        output::write_jsonl(dir.join(output::EVENTS_FILE), &records)?;
    }
    if all || out.emit_transitions {
        let records: Vec<Record> = analysis.transitions.iter().map(Record::alarm).collect();
        output::write_jsonl(dir.join(output::TRANSITIONS_FILE), &records)?;
    }
    if all || out.emit_frames {
        output::write_frames_csv(dir.join(output::FRAMES_FILE), &analysis.frames)?;
        output::write_spectra_csv(dir.join(output::SPECTRA_FILE), &analysis.spectra)?;
    }
    output::write_json(dir.join(output::RUN_FILE), &analysis.meta)
}

pub fn summary(analysis: &Analysis) -> String {
    let count = |k| analysis.alpha_events.iter().filter(|e| e.kind == k).count();
    let mut line = format!(
        "blinks={} alpha_bursts={} sustained_alpha={} transitions={} max_level={}",
        analysis.blinks.len(),
        count(AlphaKind::Burst),
        count(AlphaKind::Sustained),
        analysis.transitions.len(),
        analysis.max_level()
    );
    if analysis.alpha_baseline.is_none() {
        line.push_str(" alpha=uncalibrated");
    }
    line
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    let (config, stream) = load(&args.input)?;
    let analysis = analyze(&stream, &config)?;
    write_outputs(&analysis, &args.output)?;
    println!("{}", summary(&analysis));
    Ok(())
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    if !(args.speed > 0.0 && args.speed.is_finite()) {
        return Err(Error::invalid("speed", "must be positive"));
    }
    let (config, stream) = load(&args.input)?;
    let mut pipeline = StreamingPipeline::new(config, stream.start_time())?;
    let chunk = samples_for(config.psd_hop_s, config.input_rate_hz).max(1);
    let pace = Duration::from_secs_f64(chunk as f64 / config.input_rate_hz / args.speed);
    let started = Instant::now();
    let mut fed = 0u32;
    for samples in stream.samples().chunks(chunk) {
        for event in pipeline.push_chunk(samples)? {
            print_event(&event);
        }
        fed += 1;
        if let Some(wait) = (pace * fed).checked_sub(started.elapsed()) {
            thread::sleep(wait);
        }
    }
    let (analysis, tail) = pipeline.finish()?;
    tail.iter().for_each(print_event);
    write_outputs(&analysis, &args.output)?;
    eprintln!("{}", summary(&analysis));
    Ok(())
}

fn print_event(event: &StreamEvent) {
    let record = match event {
        StreamEvent::Blink(b) => Record::blink(b),
        StreamEvent::Alpha(a) => Record::alpha(a),
        StreamEvent::Transition(t) => Record::alarm(t),
    };
    println!("{}", serde_json::to_string(&record).expect("records serialise"));
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Signal and labels paths written for a scenario file.
pub fn generated_paths(scenario: &Path, out_dir: &Path) -> (PathBuf, PathBuf) {
    let stem = scenario
        .file_stem()
        .map_or("scenario".into(), |s| s.to_string_lossy().into_owned());
    (
        out_dir.join(format!("{stem}.csv")),
        out_dir.join(format!("{stem}.labels.jsonl")),
    )
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let scenario = SyntheticScenario::parse(&read_text(&args.input)?)?;
    let (stream, labels) = generate_synthetic(&scenario)?;
    create_dir(&args.out_dir)?;
    let (csv, labels_path) = generated_paths(&args.input, &args.out_dir);
    write_csv(&csv, &stream, true)?;
    let records = output::label_records(&labels, scenario.duration_s, scenario.sample_rate);
    output::write_jsonl(&labels_path, &records)?;
    println!(
        "wrote {} ({} samples) and {}",
        csv.display(),
        stream.len(),
        labels_path.display()
    );
    Ok(())
}

#[derive(Debug, serde::Deserialize)]
struct RunGrid {
    window_s: f64,
    hop_s: f64,
    first_eval_s: Option<f64>,
    eval_count: usize,
}

// Evaluation instants, nudged past the rounding applied to written times.
fn hop_grid(first: f64, hop: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| first + k as f64 * hop + 1e-5).collect()
}

pub fn cmd_score(args: &ScoreArgs) -> Result<()> {
    if !(args.tolerance_s >= 0.0 && args.tolerance_s.is_finite()) {
        return Err(Error::invalid("tolerance_s", "must be non-negative"));
    }
    let events = output::read_jsonl(args.input.join(output::EVENTS_FILE))?;
    let transitions_path = args.input.join(output::TRANSITIONS_FILE);
    let mut detected = events;
    if transitions_path.exists() {
        detected.extend(output::read_jsonl(&transitions_path)?);
    }
    let truth = output::read_jsonl(&args.truth)?;
    let run_path = args.input.join(output::RUN_FILE);
    let timing = TimelineTiming::default();
    let (window, grid) = if run_path.exists() {
        let run: RunGrid = serde_json::from_str(&read_text(&run_path)?).map_err(|e| Error::Parse {
            line: e.line(),
            message: format!("{}: {e}", run_path.display()),
        })?;
        let grid = run
            .first_eval_s
            .map_or_else(Vec::new, |f| hop_grid(f, run.hop_s, run.eval_count));
        (run.window_s, grid)
    } else {
        let duration = truth
            .iter()
            .find_map(|r| match r {
                Record::Scenario { duration_s, .. } => Some(*duration_s),
                _ => None,
            })
            .ok_or_else(|| Error::invalid("truth", "labels carry no scenario record"))?;
        let count = ((duration - timing.window_s) / timing.hop_s + 1e-9).floor() as usize + 1;
        (timing.window_s, hop_grid(timing.window_s, timing.hop_s, count))
    };
    let report = score(
        &EventSets::from_records(&detected),
        &EventSets::from_records(&truth),
        &grid,
        args.tolerance_s,
        window,
    );
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serialises")
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct CalibrationReport {
    baseline_relative_alpha: f64,
    alpha_threshold: f64,
    frames_used: usize,
    calibration_s: f64,
    blink_baseline_duration_s: Option<f64>,
}

pub fn cmd_calibrate(args: &InputArgs) -> Result<()> {
    let (config, stream) = load(args)?;
    let clean = preprocess(&stream, &config)?;
    let frames = compute_band_power_frames(&clean, &config.frame_config())?;
    let alpha = calibrate_baseline(&frames, config.calibration_s, config.psd_window_s)?;
    let blinks = detect_blinks(&clean, &config.blink)?;
    let blink = blink_baseline(
        &blinks,
        clean.start_time(),
        config.calibration_s,
        config.alarm.min_blinks_for_eval,
    );
    let report = CalibrationReport {
        baseline_relative_alpha: alpha.baseline_relative_alpha,
        alpha_threshold: config.alpha.threshold(&alpha),
        frames_used: alpha.frames_used,
        calibration_s: config.calibration_s,
        blink_baseline_duration_s: blink.map(|b| b.mean_duration_s),
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serialises")
    );
    Ok(())
}
