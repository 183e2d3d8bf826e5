//! Alpha-burst and sustained-alpha detection from band-power frames.

use serde::{Deserialize, Serialize};

use crate::dsp::BandPowerFrame;
use crate::error::{Error, Result};

/// Minimum clean frames for a usable baseline.
pub const MIN_CALIBRATION_FRAMES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaConfig {
    pub ratio_multiplier: f64,
    pub absolute_floor: f64,
    pub min_burst_s: f64,
    pub max_burst_s: f64,
    pub sustained_min_s: f64,
}

impl Default for AlphaConfig {
    fn default() -> Self {
        Self {
            ratio_multiplier: 2.0,
            absolute_floor: 0.35,
            min_burst_s: 0.5,
            max_burst_s: 3.0,
            sustained_min_s: 5.0,
        }
    }
}

impl AlphaConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha.ratio_multiplier", self.ratio_multiplier),
            ("alpha.min_burst_s", self.min_burst_s),
            ("alpha.max_burst_s", self.max_burst_s),
            ("alpha.sustained_min_s", self.sustained_min_s),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be positive"));
            }
        }
        if !(0.0..1.0).contains(&self.absolute_floor) {
            return Err(Error::invalid("alpha.absolute_floor", "must lie in [0, 1)"));
        }
        if self.min_burst_s > self.max_burst_s {
            return Err(Error::invalid("alpha.min_burst_s", "must not exceed max_burst_s"));
        }
        if self.max_burst_s >= self.sustained_min_s {
            return Err(Error::invalid(
                "alpha.max_burst_s",
                "must be below sustained_min_s",
            ));
        }
        Ok(())
    }

    pub fn threshold(&self, baseline: &AlphaBaseline) -> f64 {
        (self.ratio_multiplier * baseline.baseline_relative_alpha).max(self.absolute_floor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaBaseline {
    pub baseline_relative_alpha: f64,
    pub calibration_duration_s: f64,
    pub frames_used: usize,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// `true` when the frame's window ends within the calibration span.
pub fn in_calibration_span(
    frame: &BandPowerFrame,
    first_start_s: f64,
    duration_s: f64,
    window_s: f64,
) -> bool {
    frame.window_start_s + window_s <= first_start_s + duration_s + 1e-9
}

/// Median relative alpha over the clean frames whose windows end within the
/// first `duration_s` of the frame sequence.
pub fn calibrate_baseline(
    frames: &[BandPowerFrame],
    duration_s: f64,
    window_s: f64,
) -> Result<AlphaBaseline> {
    let first = frames.first().map_or(0.0, |f| f.window_start_s);
    let mut values: Vec<f64> = frames
        .iter()
        .take_while(|f| in_calibration_span(f, first, duration_s, window_s))
        .filter(|f| !f.artifact)
        .map(|f| f.relative_alpha)
        .collect();
    if values.len() < MIN_CALIBRATION_FRAMES {
        return Err(Error::InsufficientCalibration {
            clean_frames: values.len(),
            required: MIN_CALIBRATION_FRAMES,
        });
    }
    Ok(AlphaBaseline {
        baseline_relative_alpha: median(&mut values),
        calibration_duration_s: duration_s,
        frames_used: values.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaKind {
    Burst,
    Sustained,
}

/// A run of alpha-active frames. The onset is the centre of the first active
/// window; the duration spans the run's windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaEvent {
    pub kind: AlphaKind,
    pub onset_s: f64,
    pub duration_s: f64,
    pub mean_relative_alpha: f64,
}

impl AlphaEvent {
    pub fn end_s(&self) -> f64 {
        self.onset_s + self.duration_s
    }
}

#[derive(Debug, Clone, Copy)]
struct Run {
    first_start: f64,
    last_start: f64,
    sum: f64,
    frames: usize,
}

/// Incremental run detector; folding every frame through it gives the batch
/// result.
#[derive(Debug, Clone)]
pub struct AlphaTracker {
    config: AlphaConfig,
    threshold: f64,
    window_s: f64,
    run: Option<Run>,
    last_start: Option<f64>,
    index: usize,
}

impl AlphaTracker {
    pub fn new(config: AlphaConfig, baseline: &AlphaBaseline, window_s: f64) -> Self {
        Self {
            threshold: config.threshold(baseline),
            config,
            window_s,
            run: None,
            last_start: None,
            index: 0,
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn is_active(&self, frame: &BandPowerFrame) -> bool {
        !frame.artifact && frame.relative_alpha > self.threshold
    }

    pub fn push(&mut self, frame: &BandPowerFrame) -> Result<Option<AlphaEvent>> {
        if self
            .last_start
            .is_some_and(|prev| frame.window_start_s <= prev)
        {
            return Err(Error::UnsortedFrames { index: self.index });
        }
        self.last_start = Some(frame.window_start_s);
        self.index += 1;
        if self.is_active(frame) {
            let run = self.run.get_or_insert(Run {
                first_start: frame.window_start_s,
                last_start: frame.window_start_s,
                sum: 0.0,
                frames: 0,
            });
            run.last_start = frame.window_start_s;
            run.sum += frame.relative_alpha;
            run.frames += 1;
            Ok(None)
        } else {
            Ok(self.run.take().and_then(|r| self.classify(&r)))
        }
    }

    pub fn finish(mut self) -> Option<AlphaEvent> {
        self.run.take().and_then(|r| self.classify(&r))
    }

    /// The run still in progress, reported as sustained once long enough.
    pub fn provisional(&self) -> Option<AlphaEvent> {
        self.run
            .as_ref()
            .and_then(|r| self.classify(r))
            .filter(|e| e.kind == AlphaKind::Sustained)
    }

    /// Runs are classified by the spread of their window starts, so a lone
    /// frame has length zero; the reported duration adds one window.
    fn classify(&self, run: &Run) -> Option<AlphaEvent> {
        let length = run.last_start - run.first_start;
        let kind = if length >= self.config.sustained_min_s - 1e-9 {
            AlphaKind::Sustained
        } else if length >= self.config.min_burst_s - 1e-9 && length <= self.config.max_burst_s + 1e-9 {
            AlphaKind::Burst
        } else {
            return None;
        };
        Some(AlphaEvent {
            kind,
            onset_s: run.first_start + self.window_s / 2.0,
            duration_s: length + self.window_s,
            mean_relative_alpha: run.sum / run.frames as f64,
        })
    }
}

pub fn detect_alpha_events(
    frames: &[BandPowerFrame],
    baseline: &AlphaBaseline,
    config: &AlphaConfig,
    window_s: f64,
) -> Result<Vec<AlphaEvent>> {
    config.validate()?;
    let mut tracker = AlphaTracker::new(*config, baseline, window_s);
    let mut events = Vec::new();
    for f in frames {
        events.extend(tracker.push(f)?);
    }
    events.extend(tracker.finish());
    Ok(events)
}
