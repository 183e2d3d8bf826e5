//! Eye-blink artifact detection and per-blink duration measurement.
//!
//! Candidate regions are found on a 0.5–5 Hz band-limited copy of the
//! signal. The half-amplitude duration is measured on a 5 Hz lowpass copy,
//! which keeps the blink shape, against a baseline taken just outside the
//! blink. Upstream high-pass filtering sinks a blink into a shallow trough,
//! so measuring from zero would make blinks read short.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::dsp::{apply_fir, design_bandpass, design_fir, FilterKind, FirFilter, StreamingFir};
use crate::error::{Error, Result};
use crate::signal_io::SampleStream;

const MIN_RATE_HZ: f64 = 50.0;
/// Length of each baseline window on either side of a blink.
const BASELINE_SPAN_S: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlinkConfig {
    pub amplitude_threshold_uv: f64,
    pub merge_gap_s: f64,
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    /// Filter length in seconds; the tap count is the nearest odd number.
    pub filter_span_s: f64,
    /// Exclusive lower bound on half-amplitude duration.
    pub min_duration_s: f64,
    pub max_duration_s: f64,
}

impl Default for BlinkConfig {
    fn default() -> Self {
        Self {
            amplitude_threshold_uv: 75.0,
            merge_gap_s: 0.1,
            band_low_hz: 0.5,
            band_high_hz: 5.0,
            filter_span_s: 2.0,
            min_duration_s: 0.03,
            max_duration_s: 1.0,
        }
    }
}

impl BlinkConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("blink.amplitude_threshold_uv", self.amplitude_threshold_uv),
            ("blink.merge_gap_s", self.merge_gap_s),
            ("blink.band_low_hz", self.band_low_hz),
            ("blink.filter_span_s", self.filter_span_s),
            ("blink.max_duration_s", self.max_duration_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be positive"));
            }
        }
        if !(self.band_high_hz > self.band_low_hz) {
            return Err(Error::invalid("blink.band_high_hz", "must exceed band_low_hz"));
        }
        if !(self.min_duration_s >= 0.0 && self.min_duration_s < self.max_duration_s) {
            return Err(Error::invalid(
                "blink.min_duration_s",
                "must be non-negative and below max_duration_s",
            ));
        }
        Ok(())
    }

    fn filters(&self, rate: f64) -> Result<(FirFilter, FirFilter)> {
        self.validate()?;
        if rate < MIN_RATE_HZ {
            return Err(Error::invalid(
                "sample_rate",
                format!("blink detection needs at least {MIN_RATE_HZ} Hz, got {rate}"),
            ));
        }
        let taps = ((self.filter_span_s * rate).round() as usize).max(3) | 1;
        let band = design_bandpass(self.band_low_hz, self.band_high_hz, taps, rate)?;
        let smooth = design_fir(FilterKind::Lowpass, self.band_high_hz, taps, rate)?;
        Ok((band, smooth))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlinkEvent {
    pub onset_s: f64,
    pub duration_s: f64,
    pub peak_amplitude_uv: f64,
}

impl BlinkEvent {
    pub fn end_s(&self) -> f64 {
        self.onset_s + self.duration_s
    }
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    index: u64,
    t: f64,
    smooth: f64,
}

#[derive(Debug, Clone, Copy)]
struct Region {
    start: u64,
    last_above: u64,
    peak: f64,
    peak_index: u64,
}

/// Region state machine over already-filtered samples.
#[derive(Debug, Clone)]
pub struct BlinkTracker {
    config: BlinkConfig,
    rate: f64,
    merge_gap: u64,
    lookback: u64,
    buffer: VecDeque<Sample>,
    region: Option<Region>,
    next_index: u64,
    last_t: f64,
    last_end: f64,
}

impl BlinkTracker {
    pub fn new(config: BlinkConfig, rate: f64) -> Self {
        Self {
            config,
            rate,
            merge_gap: (config.merge_gap_s * rate).round().max(1.0) as u64,
            lookback: ((2.0 * config.max_duration_s + BASELINE_SPAN_S) * rate).ceil() as u64 + 1,
            buffer: VecDeque::new(),
            region: None,
            next_index: 0,
            last_t: f64::NEG_INFINITY,
            last_end: f64::NEG_INFINITY,
        }
    }

    /// No event emitted later can have an onset earlier than this.
    pub fn settled_until(&self) -> f64 {
        let anchor = match &self.region {
            Some(r) => self
                .buffer
                .iter()
                .find(|s| s.index == r.start)
                .map_or(self.last_t, |s| s.t),
            None => self.last_t,
        };
        anchor - self.config.max_duration_s
    }

    /// Feeds one sample: `band` drives region detection, `smooth` is measured.
    pub fn push(&mut self, t: f64, band: f64, smooth: f64) -> Option<BlinkEvent> {
        let index = self.next_index;
        self.next_index += 1;
        self.last_t = t;
        self.buffer.push_back(Sample { index, t, smooth });
        let above = band > self.config.amplitude_threshold_uv;

        let mut out = None;
        match self.region.as_mut() {
            None if above => {
                self.region = Some(Region {
                    start: index,
                    last_above: index,
                    peak: smooth,
                    peak_index: index,
                });
            }
            None => {}
            Some(r) => {
                if above {
                    r.last_above = index;
                    if smooth > r.peak {
                        r.peak = smooth;
                        r.peak_index = index;
                    }
                } else if index - r.last_above >= self.merge_gap && self.ready(index) {
                    out = self.close();
                }
            }
        }
        if self.region.is_none() {
            while self
                .buffer
                .front()
                .is_some_and(|s| index - s.index > self.lookback)
            {
                self.buffer.pop_front();
            }
        }
        out
    }

    /// Flushes a pending region at end of input.
    pub fn finish(mut self) -> Option<BlinkEvent> {
        self.region.is_some().then(|| self.close()).flatten()
    }

    // The baseline window after the blink is complete, or the region can no
    // longer yield a valid duration.
    fn ready(&self, index: u64) -> bool {
        let r = self.region.as_ref().expect("pending region");
        if index - r.peak_index > self.lookback {
            return true;
        }
        let Some(pos) = self.peak_position(r) else {
            return true;
        };
        match self.crossings(pos, r.peak / 2.0) {
            (_, Some(end)) => {
                let (_, post) = self.baseline_windows(pos, r.peak / 2.0, end);
                self.last_t >= post
            }
            _ => false,
        }
    }

    fn peak_position(&self, r: &Region) -> Option<usize> {
        self.buffer.iter().position(|s| s.index == r.peak_index)
    }

    // Interpolated crossings of `level`, scanning outward from the peak.
    fn crossings(&self, pos: usize, level: f64) -> (Option<f64>, Option<f64>) {
        let crossing = |a: &Sample, b: &Sample| {
            let frac = (level - a.smooth) / (b.smooth - a.smooth);
            a.t + frac * (b.t - a.t)
        };
        let b = &self.buffer;
        let rising = (0..pos)
            .rev()
            .find(|&i| b[i].smooth <= level)
            .map(|i| crossing(&b[i], &b[i + 1]));
        let falling = (pos + 1..b.len())
            .find(|&i| b[i].smooth <= level)
            .map(|i| crossing(&b[i - 1], &b[i]));
        (rising, falling)
    }

    // Outer edges of the two baseline windows, placed one provisional
    // duration beyond the provisional crossings.
    fn baseline_windows(&self, pos: usize, level: f64, end: f64) -> (f64, f64) {
        let onset = self.crossings(pos, level).0.unwrap_or(end);
        let margin = (end - onset).max(self.config.min_duration_s);
        (
            onset - margin - BASELINE_SPAN_S,
            end + margin + BASELINE_SPAN_S,
        )
    }

    fn baseline(&self, pos: usize, peak: f64) -> f64 {
        let (Some(_), Some(end)) = self.crossings(pos, peak / 2.0) else {
            return 0.0;
        };
        let (pre, post) = self.baseline_windows(pos, peak / 2.0, end);
        let mut values: Vec<f64> = self
            .buffer
            .iter()
            .filter(|s| {
                (s.t >= pre && s.t < pre + BASELINE_SPAN_S)
                    || (s.t > post - BASELINE_SPAN_S && s.t <= post)
            })
            .map(|s| s.smooth)
            .collect();
        if values.is_empty() {
            return 0.0;
        }
        values.sort_by(f64::total_cmp);
        let n = values.len();
        if n % 2 == 1 {
            values[n / 2]
        } else {
            0.5 * (values[n / 2 - 1] + values[n / 2])
        }
    }

    fn close(&mut self) -> Option<BlinkEvent> {
        let r = self.region.take()?;
        let pos = self.peak_position(&r)?;
        let base = self.baseline(pos, r.peak);
        let amplitude = r.peak - base;
        if !(r.peak > 0.0 && amplitude > 0.0) {
            return None;
        }
        let (onset, end) = match self.crossings(pos, base + amplitude / 2.0) {
            (Some(a), Some(b)) => (a, b),
            _ => return None,
        };
        let duration = end - onset;
        if duration <= self.config.min_duration_s
            || duration > self.config.max_duration_s
            || onset < self.last_end
        {
            return None;
        }
        self.last_end = end;
        Some(BlinkEvent {
            onset_s: onset,
            duration_s: duration,
            peak_amplitude_uv: amplitude,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

/// Streaming blink detector: filters raw samples and runs a [`BlinkTracker`].
#[derive(Debug, Clone)]
pub struct BlinkDetector {
    band: StreamingFir,
    smooth: StreamingFir,
    tracker: BlinkTracker,
    start_time: f64,
    delay_s: f64,
    count: u64,
}

impl BlinkDetector {
    /// `start_time` is the timestamp of the first sample to be pushed.
    pub fn new(config: BlinkConfig, rate: f64, start_time: f64) -> Result<Self> {
        let (band, smooth) = config.filters(rate)?;
        Ok(Self {
            band: StreamingFir::new(&band),
            smooth: StreamingFir::new(&smooth),
            tracker: BlinkTracker::new(config, rate),
            start_time,
            delay_s: band.group_delay_s(),
            count: 0,
        })
    }

    pub fn push(&mut self, x: f64) -> Option<BlinkEvent> {
        let t = (self.start_time - self.delay_s) + self.count as f64 / self.tracker.rate;
        self.count += 1;
        let y = self.band.push(x);
        let s = self.smooth.push(x);
        self.tracker.push(t, y, s)
    }

    pub fn settled_until(&self) -> f64 {
        self.tracker.settled_until()
    }

    pub fn finish(self) -> Option<BlinkEvent> {
        self.tracker.finish()
    }
}

/// Detects blinks in a stream already high-pass filtered to remove drift.
pub fn detect_blinks(stream: &SampleStream, config: &BlinkConfig) -> Result<Vec<BlinkEvent>> {
    let (band, smooth) = config.filters(stream.sample_rate())?;
    let y = apply_fir(&band, stream)?;
    let s = apply_fir(&smooth, stream)?;
    let mut tracker = BlinkTracker::new(*config, stream.sample_rate());
    let mut events: Vec<BlinkEvent> = y
        .samples()
        .iter()
        .zip(s.samples())
        .enumerate()
        .filter_map(|(i, (&yi, &si))| tracker.push(y.time_of(i), yi, si))
        .collect();
    events.extend(tracker.finish());
    Ok(events)
}

/// Aggregate over blinks whose onset lies in `[start, start + len)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlinkStatistics {
    pub window_start_s: f64,
    pub window_len_s: f64,
    pub mean_duration_s: Option<f64>,
    pub blink_rate_per_min: f64,
    pub event_count: usize,
}

pub fn blink_statistics(
    events: &[BlinkEvent],
    window_start_s: f64,
    window_len_s: f64,
) -> BlinkStatistics {
    let end = window_start_s + window_len_s;
    let (count, total) = events
        .iter()
        .filter(|e| e.onset_s >= window_start_s && e.onset_s < end)
        .fold((0usize, 0.0), |(n, sum), e| (n + 1, sum + e.duration_s));
    BlinkStatistics {
        window_start_s,
        window_len_s,
        mean_duration_s: (count > 0).then(|| total / count as f64),
        blink_rate_per_min: count as f64 * 60.0 / window_len_s,
        event_count: count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_io::{generate_synthetic, BlinkSpec, SyntheticScenario};

    fn ev(onset: f64, dur: f64) -> BlinkEvent {
        BlinkEvent {
            onset_s: onset,
            duration_s: dur,
            peak_amplitude_uv: 100.0,
        }
    }

    #[test]
    fn statistics_arithmetic() {
        let events: Vec<_> = (0..6).map(|k| ev(5.0 + 10.0 * k as f64, 0.2)).collect();
        let st = blink_statistics(&events, 0.0, 60.0);
        assert_eq!(st.event_count, 6);
        assert!((st.mean_duration_s.unwrap() - 0.2).abs() < 1e-12);
        assert!((st.blink_rate_per_min - 6.0).abs() < 1e-12);

        let st = blink_statistics(&[], 0.0, 60.0);
        assert_eq!(st.event_count, 0);
        assert_eq!(st.mean_duration_s, None);
    }

    #[test]
    fn statistics_window_is_half_open() {
        let events = [ev(9.9, 0.3), ev(10.0, 0.3), ev(19.99, 0.3), ev(20.0, 0.3)];
        let st = blink_statistics(&events, 10.0, 10.0);
        assert_eq!(st.event_count, 2);
    }

    #[test]
    fn zero_stream_has_no_blinks() {
        let s = SampleStream::new(250.0, vec![0.0; 2500]).unwrap();
        assert!(detect_blinks(&s, &BlinkConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn low_rate_rejected() {
        let s = SampleStream::new(40.0, vec![0.0; 400]).unwrap();
        assert!(detect_blinks(&s, &BlinkConfig::default()).is_err());
    }

    #[test]
    fn sub_threshold_blink_ignored() {
        let sc = SyntheticScenario {
            duration_s: 10.0,
            sample_rate: 250.0,
            background_noise_uv_rms: 10.0,
            blink_specs: vec![BlinkSpec {
                onset_s: 4.0,
                duration_s: 0.25,
                peak_amplitude_uv: 40.0,
            }],
            seed: 3,
            ..Default::default()
        };
        let (s, _) = generate_synthetic(&sc).unwrap();
        assert!(detect_blinks(&s, &BlinkConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn streaming_detector_matches_batch() {
        let sc = SyntheticScenario {
            duration_s: 20.0,
            sample_rate: 100.0,
            background_noise_uv_rms: 10.0,
            blink_specs: (0..5)
                .map(|k| BlinkSpec {
                    onset_s: 2.0 + 3.5 * k as f64,
                    duration_s: 0.15 + 0.1 * k as f64,
                    peak_amplitude_uv: 200.0,
                })
                .collect(),
            seed: 11,
            ..Default::default()
        };
        let (s, _) = generate_synthetic(&sc).unwrap();
        let batch = detect_blinks(&s, &BlinkConfig::default()).unwrap();
        assert_eq!(batch.len(), 5);
        let mut d = BlinkDetector::new(BlinkConfig::default(), 100.0, 0.0).unwrap();
        let mut streamed: Vec<_> = s.samples().iter().filter_map(|&x| d.push(x)).collect();
        streamed.extend(d.finish());
        assert_eq!(batch, streamed);
    }
}
