//! Sample streams, CSV ingestion, analysis framing and the labelled
//! synthetic-signal generator.

mod csv;
mod synthetic;

pub use self::csv::{read_csv, write_csv};
pub use self::synthetic::{
    generate_synthetic, AlphaSpec, ArtifactSpec, BlinkSpec, GroundTruthLabels, LabelledInterval,
    SyntheticScenario,
};

use crate::error::{Error, Result};

/// Default acquisition rate in samples per second.
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 500.0;

/// Uniformly sampled single-channel EEG in microvolts.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStream {
    sample_rate: f64,
    start_time: f64,
    samples: Vec<f64>,
}

impl SampleStream {
    pub fn new(sample_rate: f64, samples: Vec<f64>) -> Result<Self> {
        Self::with_start(sample_rate, 0.0, samples)
    }

    pub fn with_start(sample_rate: f64, start_time: f64, samples: Vec<f64>) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::invalid(
                "sample_rate",
                format!("must be positive, got {sample_rate}"),
            ));
        }
        if !start_time.is_finite() {
            return Err(Error::invalid("start_time", "must be finite"));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(
                format!("samples[{i}]"),
                "amplitude values must be finite",
            ));
        }
        Ok(Self {
            sample_rate,
            start_time,
            samples,
        })
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Timestamp of sample `i`.
    pub fn time_of(&self, i: usize) -> f64 {
        self.start_time + i as f64 / self.sample_rate
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Drops leading samples whose timestamp precedes `t`.
    pub fn trim_before(self, t: f64) -> Self {
        let skip = samples_before(self.start_time, self.sample_rate, t).min(self.samples.len());
        Self {
            sample_rate: self.sample_rate,
            start_time: self.start_time + skip as f64 / self.sample_rate,
            samples: self.samples[skip..].to_vec(),
        }
    }

    /// Drops trailing samples at or after time `t`.
    pub fn trim_from(mut self, t: f64) -> Self {
        let keep = samples_before(self.start_time, self.sample_rate, t).min(self.samples.len());
        self.samples.truncate(keep);
        self
    }
}

/// How many samples of a stream starting at `start` precede time `t`.
pub fn samples_before(start: f64, rate: f64, t: f64) -> usize {
    ((t - start) * rate - 1e-9).ceil().max(0.0) as usize
}

/// One analysis window cut from a stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window<'a> {
    pub start_s: f64,
    pub samples: &'a [f64],
}

/// Number of samples in a window or hop of `seconds` at `rate`.
pub fn samples_for(seconds: f64, rate: f64) -> usize {
    (seconds * rate).round() as usize
}

/// Cuts a stream into overlapping windows of `window_s` advanced by `hop_s`.
///
/// A trailing partial window is discarded. A window longer than the stream
/// yields no windows.
pub fn frame_stream(stream: &SampleStream, window_s: f64, hop_s: f64) -> Result<Vec<Window<'_>>> {
    let (win, hop) = window_geometry(window_s, hop_s, stream.sample_rate())?;
    let samples = stream.samples();
    if samples.len() < win {
        return Ok(Vec::new());
    }
    let count = (samples.len() - win) / hop + 1;
    Ok((0..count)
        .map(|k| Window {
            start_s: stream.time_of(k * hop),
            samples: &samples[k * hop..k * hop + win],
        })
        .collect())
}

/// Validates window/hop durations and converts them to sample counts.
pub fn window_geometry(window_s: f64, hop_s: f64, rate: f64) -> Result<(usize, usize)> {
    if !(hop_s > 0.0 && hop_s.is_finite()) {
        return Err(Error::invalid("hop_s", "must be positive"));
    }
    if !(window_s >= hop_s && window_s.is_finite()) {
        return Err(Error::invalid("window_s", "must be at least hop_s"));
    }
    let win = samples_for(window_s, rate);
    let hop = samples_for(hop_s, rate).max(1);
    if win < 2 {
        return Err(Error::invalid(
            "window_s",
            format!("window of {window_s} s at {rate} Hz holds fewer than 2 samples"),
        ));
    }
    Ok((win, hop))
}
