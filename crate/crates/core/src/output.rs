//! File formats written by the CLI.
//!
//! Events and transitions are JSON lines, one object per line, tagged by a
//! `type` field. Times are rounded to 6 decimals and amplitudes to 3 before
//! serialising so files are stable across platforms. Frames and spectra are
//! CSV with a header row.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::alarm::{AlarmTransition, Trigger};
use crate::alpha::{AlphaEvent, AlphaKind};
use crate::blink::BlinkEvent;
use crate::dsp::{BandPowerFrame, Spectrum};
use crate::error::{Error, Result};
use crate::signal_io::{GroundTruthLabels, LabelledInterval};

pub const EVENTS_FILE: &str = "events.jsonl";
pub const TRANSITIONS_FILE: &str = "transitions.jsonl";
pub const FRAMES_FILE: &str = "frames.csv";
pub const SPECTRA_FILE: &str = "spectra.csv";
pub const RUN_FILE: &str = "run.json";

fn time(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn amplitude(x: f64) -> f64 {
    (x * 1e3).round() / 1e3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Record {
    Blink {
        onset_s: f64,
        duration_s: f64,
        peak_uv: f64,
    },
    Alpha {
        kind: AlphaKind,
        onset_s: f64,
        duration_s: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean_relative_alpha: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        amplitude_uv: Option<f64>,
    },
    Alarm {
        time_s: f64,
        from: u8,
        to: u8,
        trigger: Trigger,
    },
    ExpectedLevel {
        time_s: f64,
        level: u8,
    },
    Scenario {
        duration_s: f64,
        sample_rate: f64,
    },
}

impl Record {
    pub fn blink(e: &BlinkEvent) -> Self {
        Record::Blink {
            onset_s: time(e.onset_s),
            duration_s: time(e.duration_s),
            peak_uv: amplitude(e.peak_amplitude_uv),
        }
    }

    pub fn alpha(e: &AlphaEvent) -> Self {
        Record::Alpha {
            kind: e.kind,
            onset_s: time(e.onset_s),
            duration_s: time(e.duration_s),
            mean_relative_alpha: Some(time(e.mean_relative_alpha)),
            amplitude_uv: None,
        }
    }

    pub fn alarm(t: &AlarmTransition) -> Self {
        Record::Alarm {
            time_s: time(t.time_s),
            from: t.from_level,
            to: t.to_level,
            trigger: t.trigger,
        }
    }

    fn onset(&self) -> f64 {
        match self {
            Record::Blink { onset_s, .. } | Record::Alpha { onset_s, .. } => *onset_s,
            Record::Alarm { time_s, .. } | Record::ExpectedLevel { time_s, .. } => *time_s,
            Record::Scenario { .. } => f64::NEG_INFINITY,
        }
    }
}

/// Blink and alpha records in onset order; blinks first on ties.
pub fn event_records(blinks: &[BlinkEvent], alpha: &[AlphaEvent]) -> Vec<Record> {
    let mut records: Vec<Record> = blinks
        .iter()
        .map(Record::blink)
        .chain(alpha.iter().map(Record::alpha))
        .collect();
    // stable sort keeps blinks ahead of alpha events at equal onsets
    records.sort_by(|a, b| a.onset().total_cmp(&b.onset()));
    records
}

fn io_error(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_with(path: &Path, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let file = fs::File::create(path).map_err(io_error(path))?;
    let mut out = BufWriter::new(file);
    body(&mut out).map_err(io_error(path))?;
    out.flush().map_err(io_error(path))
}

pub fn write_jsonl(path: impl AsRef<Path>, records: &[Record]) -> Result<()> {
    write_with(path.as_ref(), |out| {
        for r in records {
            serde_json::to_writer(&mut *out, r)?;
            writeln!(out)?;
        }
        Ok(())
    })
}

pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Vec<Record>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(io_error(path))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_error(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: format!("{}: {e}", path.display()),
        })?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_frames_csv(path: impl AsRef<Path>, frames: &[BandPowerFrame]) -> Result<()> {
    write_with(path.as_ref(), |out| {
        writeln!(
            out,
            "window_start_s,alpha_power_uv2,theta_power_uv2,total_power_uv2,relative_alpha,artifact"
        )?;
        for f in frames {
            writeln!(
                out,
                "{:.6},{:.6},{:.6},{:.6},{:.6},{}",
                f.window_start_s,
                f.alpha_power_uv2,
                f.theta_power_uv2,
                f.total_power_uv2,
                f.relative_alpha,
                u8::from(f.artifact)
            )?;
        }
        Ok(())
    })
}

/// One row per frequency bin per frame.
pub fn write_spectra_csv(path: impl AsRef<Path>, spectra: &[Spectrum]) -> Result<()> {
    write_with(path.as_ref(), |out| {
        writeln!(out, "window_start_s,frequency_hz,psd_uv2_per_hz")?;
        for s in spectra {
            for (f, p) in s.bin_frequencies.iter().zip(&s.power_density) {
                writeln!(out, "{:.6},{:.6},{:.6}", s.window_start_s, f, p)?;
            }
        }
        Ok(())
    })
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    write_with(path.as_ref(), |out| {
        serde_json::to_writer_pretty(&mut *out, value)?;
        writeln!(out)
    })
}

/// Labels as JSON lines: a scenario record, every injected event, then the
/// expected alarm change points.
pub fn label_records(labels: &GroundTruthLabels, duration_s: f64, sample_rate: f64) -> Vec<Record> {
    let alpha = |kind: AlphaKind, v: &LabelledInterval| Record::Alpha {
        kind,
        onset_s: time(v.onset_s),
        duration_s: time(v.duration_s),
        mean_relative_alpha: None,
        amplitude_uv: Some(amplitude(v.magnitude_uv)),
    };
    let mut records = vec![Record::Scenario {
        duration_s,
        sample_rate,
    }];
    records.extend(labels.blink_events.iter().map(|b| Record::Blink {
        onset_s: time(b.onset_s),
        duration_s: time(b.duration_s),
        peak_uv: amplitude(b.magnitude_uv),
    }));
    records.extend(
        labels
            .alpha_burst_events
            .iter()
            .map(|v| alpha(AlphaKind::Burst, v)),
    );
    records.extend(
        labels
            .sustained_alpha_events
            .iter()
            .map(|v| alpha(AlphaKind::Sustained, v)),
    );
    records.extend(
        labels
            .expected_alarm_timeline
            .iter()
            .map(|&(t, level)| Record::ExpectedLevel {
                time_s: time(t),
                level,
            }),
    );
    records
}
