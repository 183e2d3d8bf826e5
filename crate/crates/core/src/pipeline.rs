//! The full analysis chain, in batch and sample-at-a-time form.
//!
//! Raw input is lowpassed, decimated and highpassed. Each filter stage is
//! flushed with zeros at the end of input so the cleaned stream covers the
//! same time span as the input after group-delay correction. Frames, blinks
//! and alpha events are computed on that cleaned stream and the alarm is
//! evaluated at the end of every frame window. [`StreamingPipeline`] produces the same values as
//! [`analyze`] for any chunking of the input.

use serde::Serialize;

use crate::alarm::{
    blink_baseline, evaluate_at, frame_eval_times, run_timeline, AlarmState, AlarmTransition,
    BlinkBaseline, TimedAlpha, TimelineTiming,
};
use crate::alpha::{
    calibrate_baseline, detect_alpha_events, in_calibration_span, AlphaBaseline, AlphaEvent,
    AlphaTracker,
};
use crate::blink::{detect_blinks, BlinkDetector, BlinkEvent};
use crate::config::AnalysisConfig;
use crate::dsp::{
    apply_fir, decimate, design_fir, BandPowerFrame, Decimator, FilterKind, FirFilter,
    FrameBuilder, Spectrum, StreamingFir,
};
use crate::error::{Error, Result};
use crate::signal_io::{frame_stream, samples_before, window_geometry, SampleStream};

/// Everything one analysis run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub frames: Vec<BandPowerFrame>,
    /// Welch spectrum of each frame, index-aligned with `frames`.
    pub spectra: Vec<Spectrum>,
    pub blinks: Vec<BlinkEvent>,
    pub alpha_events: Vec<AlphaEvent>,
    pub transitions: Vec<AlarmTransition>,
    /// `None` when the calibration span held too few clean frames; alpha
    /// detection is then skipped.
    pub alpha_baseline: Option<AlphaBaseline>,
    pub blink_baseline: Option<BlinkBaseline>,
    pub meta: RunMeta,
}

/// Timing facts about a run, written alongside its outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMeta {
    pub input_rate_hz: f64,
    pub analysis_rate_hz: f64,
    pub input_start_s: f64,
    pub input_samples: usize,
    pub clean_start_s: f64,
    pub window_s: f64,
    pub hop_s: f64,
    pub first_eval_s: Option<f64>,
    pub last_eval_s: Option<f64>,
    pub eval_count: usize,
    pub max_level: u8,
    pub baseline_relative_alpha: Option<f64>,
    pub baseline_frames: usize,
    pub baseline_blink_duration_s: Option<f64>,
}

impl Analysis {
    pub fn max_level(&self) -> u8 {
        self.meta.max_level
    }

    pub fn eval_times(&self) -> Vec<f64> {
        frame_eval_times(&self.frames, self.meta.window_s)
    }
}

struct Filters {
    lpf: FirFilter,
    hpf: FirFilter,
}

impl Filters {
    fn design(config: &AnalysisConfig) -> Result<Self> {
        config.validate()?;
        let lpf = design_fir(
            FilterKind::Lowpass,
            config.lpf_corner_hz,
            config.lpf_taps,
            config.input_rate_hz,
        )?;
        let hpf = design_fir(
            FilterKind::Highpass,
            config.hpf_corner_hz,
            config.hpf_taps,
            config.analysis_rate_hz(),
        )?;
        Ok(Self { lpf, hpf })
    }

    // Start time of the highpassed stream for input starting at `start`.
    fn shifted_start(&self, start: f64) -> f64 {
        (start - self.lpf.group_delay_s()) - self.hpf.group_delay_s()
    }

    // Zeros appended at each stage's input to flush its delay line.
    fn flush_len(filter: &FirFilter) -> usize {
        filter.group_delay_samples().ceil() as usize
    }
}

fn padded(rate: f64, start: f64, mut samples: Vec<f64>, extra: usize) -> Result<SampleStream> {
    samples.resize(samples.len() + extra, 0.0);
    SampleStream::with_start(rate, start, samples)
}

fn check_rate(stream: &SampleStream, config: &AnalysisConfig) -> Result<()> {
    let (a, b) = (stream.sample_rate(), config.input_rate_hz);
    if (a - b).abs() > 1e-9 * b {
        return Err(Error::RateMismatch {
            filter_hz: b,
            stream_hz: a,
        });
    }
    Ok(())
}

/// Lowpass, decimate, highpass, and crop to the input's time span.
pub fn preprocess(stream: &SampleStream, config: &AnalysisConfig) -> Result<SampleStream> {
    check_rate(stream, config)?;
    let filters = Filters::design(config)?;
    let start = stream.start_time();
    let end = start + stream.len() as f64 / config.input_rate_hz;
    let raw = padded(
        config.input_rate_hz,
        start,
        stream.samples().to_vec(),
        Filters::flush_len(&filters.lpf),
    )?;
    let reduced = decimate(&apply_fir(&filters.lpf, &raw)?, config.decim_factor)?;
    let reduced = padded(
        config.analysis_rate_hz(),
        reduced.start_time(),
        reduced.into_samples(),
        Filters::flush_len(&filters.hpf),
    )?;
    Ok(apply_fir(&filters.hpf, &reduced)?
        .trim_before(start)
        .trim_from(end))
}

fn alpha_calibration(
    frames: &[BandPowerFrame],
    config: &AnalysisConfig,
) -> Result<Option<AlphaBaseline>> {
    match calibrate_baseline(frames, config.calibration_s, config.psd_window_s) {
        Ok(b) => Ok(Some(b)),
        Err(e @ Error::InsufficientCalibration { .. }) => {
            log::warn!("alpha detection disabled: {e}");
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Batch analysis of a complete recording.
pub fn analyze(stream: &SampleStream, config: &AnalysisConfig) -> Result<Analysis> {
    let clean = preprocess(stream, config)?;
    let timing = config.timing();
    let frame_config = config.frame_config();
    let builder = FrameBuilder::new(clean.sample_rate(), &frame_config)?;
    let (frames, spectra): (Vec<_>, Vec<_>) =
        frame_stream(&clean, frame_config.window_s, frame_config.hop_s)?
            .into_iter()
            .map(|w| builder.frame_with_spectrum(w.start_s, w.samples))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
    let blinks = detect_blinks(&clean, &config.blink)?;
    let alpha_baseline = alpha_calibration(&frames, config)?;
    let alpha_events = match &alpha_baseline {
        Some(b) => detect_alpha_events(&frames, b, &config.alpha, config.psd_window_s)?,
        None => Vec::new(),
    };
    let blink_base = blink_baseline(
        &blinks,
        clean.start_time(),
        config.calibration_s,
        config.alarm.min_blinks_for_eval,
    );
    let transitions = run_timeline(
        &frames,
        &blinks,
        &alpha_events,
        &config.alarm,
        &timing,
        blink_base,
    )?;
    let meta = run_meta(
        config,
        stream.start_time(),
        stream.len(),
        clean.start_time(),
        &frames,
        &transitions,
        alpha_baseline.as_ref(),
        blink_base,
    );
    Ok(Analysis {
        frames,
        spectra,
        blinks,
        alpha_events,
        transitions,
        alpha_baseline,
        blink_baseline: blink_base,
        meta,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_meta(
    config: &AnalysisConfig,
    input_start_s: f64,
    input_samples: usize,
    clean_start_s: f64,
    frames: &[BandPowerFrame],
    transitions: &[AlarmTransition],
    alpha: Option<&AlphaBaseline>,
    blink: Option<BlinkBaseline>,
) -> RunMeta {
    let times = frame_eval_times(frames, config.psd_window_s);
    RunMeta {
        input_rate_hz: config.input_rate_hz,
        analysis_rate_hz: config.analysis_rate_hz(),
        input_start_s,
        input_samples,
        clean_start_s,
        window_s: config.psd_window_s,
        hop_s: config.psd_hop_s,
        first_eval_s: times.first().copied(),
        last_eval_s: times.last().copied(),
        eval_count: times.len(),
        max_level: transitions.iter().map(|t| t.to_level).max().unwrap_or(0),
        baseline_relative_alpha: alpha.map(|a| a.baseline_relative_alpha),
        baseline_frames: alpha.map_or(0, |a| a.frames_used),
        baseline_blink_duration_s: blink.map(|b| b.mean_duration_s),
    }
}

/// Output of the streaming pipeline, in the order it became known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StreamEvent {
    Blink(BlinkEvent),
    Alpha(AlphaEvent),
    Transition(AlarmTransition),
}

#[derive(Debug, Clone)]
enum AlphaStage {
    Calibrating,
    Tracking(AlphaBaseline, AlphaTracker),
    Unavailable,
}

/// Incremental counterpart of [`analyze`].
///
/// The alarm at a frame's end time `t` is evaluated only once nothing still
/// to come can change it: the blink detector has settled past `t`, the alpha
/// calibration is resolved, and a frame starting at or after `t` exists.
pub struct StreamingPipeline {
    config: AnalysisConfig,
    timing: TimelineTiming,
    input_start: f64,
    input_count: usize,
    lpf: StreamingFir,
    decimator: Decimator,
    hpf: StreamingFir,
    lpf_flush: usize,
    hpf_flush: usize,
    skip: usize,
    reduced_count: usize,
    clean_start: f64,
    clean_limit: Option<usize>,
    rate: f64,
    blink: BlinkDetector,
    builder: FrameBuilder,
    win: usize,
    hop: usize,
    lookahead: usize,
    // clean samples from index `buffer_offset` on
    buffer: Vec<f64>,
    buffer_offset: usize,
    clean_count: usize,
    frames: Vec<BandPowerFrame>,
    spectra: Vec<Spectrum>,
    blinks: Vec<BlinkEvent>,
    stage: AlphaStage,
    alpha: Vec<TimedAlpha>,
    blink_base: Option<Option<BlinkBaseline>>,
    state: AlarmState,
    next_eval: usize,
    transitions: Vec<AlarmTransition>,
}

impl StreamingPipeline {
    pub fn new(config: AnalysisConfig, input_start_s: f64) -> Result<Self> {
        let filters = Filters::design(&config)?;
        let rate = config.analysis_rate_hz();
        let hp_start = filters.shifted_start(input_start_s);
        let skip = samples_before(hp_start, rate, input_start_s);
        let clean_start = hp_start + skip as f64 / rate;
        let frame_config = config.frame_config();
        let builder = FrameBuilder::new(rate, &frame_config)?;
        let (win, hop) = window_geometry(frame_config.window_s, frame_config.hop_s, rate)?;
        Ok(Self {
            timing: config.timing(),
            input_start: input_start_s,
            input_count: 0,
            lpf: StreamingFir::new(&filters.lpf),
            decimator: Decimator::new(config.decim_factor)?,
            hpf: StreamingFir::new(&filters.hpf),
            lpf_flush: Filters::flush_len(&filters.lpf),
            hpf_flush: Filters::flush_len(&filters.hpf),
            skip,
            reduced_count: 0,
            clean_start,
            clean_limit: None,
            rate,
            blink: BlinkDetector::new(config.blink, rate, clean_start)?,
            builder,
            win,
            hop,
            lookahead: win.div_ceil(hop),
            buffer: Vec::new(),
            buffer_offset: 0,
            clean_count: 0,
            frames: Vec::new(),
            spectra: Vec::new(),
            blinks: Vec::new(),
            stage: AlphaStage::Calibrating,
            alpha: Vec::new(),
            blink_base: None,
            state: AlarmState::default(),
            next_eval: 0,
            transitions: Vec::new(),
            config,
        })
    }

    /// Frames computed so far.
    pub fn frames(&self) -> &[BandPowerFrame] {
        &self.frames
    }

    pub fn push_chunk(&mut self, samples: &[f64]) -> Result<Vec<StreamEvent>> {
        let mut out = Vec::new();
        for &x in samples {
            self.input_count += 1;
            self.feed_raw(x, &mut out)?;
        }
        self.run_alarm(false, &mut out)?;
        Ok(out)
    }

    fn feed_raw(&mut self, x: f64, out: &mut Vec<StreamEvent>) -> Result<()> {
        let low = self.lpf.push(x);
        match self.decimator.push(low) {
            Some(reduced) => self.feed_reduced(reduced, out),
            None => Ok(()),
        }
    }

    fn feed_reduced(&mut self, x: f64, out: &mut Vec<StreamEvent>) -> Result<()> {
        let high = self.hpf.push(x);
        self.reduced_count += 1;
        if self.reduced_count <= self.skip
            || self.clean_limit.is_some_and(|n| self.clean_count >= n)
        {
            return Ok(());
        }
        if let Some(b) = self.blink.push(high) {
            self.blinks.push(b);
            out.push(StreamEvent::Blink(b));
        }
        self.buffer.push(high);
        self.clean_count += 1;
        let k = self.frames.len();
        if self.clean_count == k * self.hop + self.win {
            let from = k * self.hop - self.buffer_offset;
            let start = self.clean_start + (k * self.hop) as f64 / self.rate;
            let (frame, spectrum) = self
                .builder
                .frame_with_spectrum(start, &self.buffer[from..from + self.win])?;
            self.frames.push(frame);
            self.spectra.push(spectrum);
            let drop = (k + 1) * self.hop - self.buffer_offset;
            self.buffer.drain(..drop.min(self.buffer.len()));
            self.buffer_offset += drop;
            self.on_frame(out)?;
        }
        Ok(())
    }

    fn on_frame(&mut self, out: &mut Vec<StreamEvent>) -> Result<()> {
        match self.stage {
            AlphaStage::Calibrating => {
                let first = self.frames[0].window_start_s;
                let last = self.frames.last().expect("frame just pushed");
                let (span, window) = (self.config.calibration_s, self.config.psd_window_s);
                if !in_calibration_span(last, first, span, window) {
                    self.calibrate(out)?;
                }
            }
            AlphaStage::Tracking(..) => {
                let frame = *self.frames.last().expect("frame just pushed");
                self.track(&frame, out)?;
            }
            AlphaStage::Unavailable => {}
        }
        Ok(())
    }

    fn calibrate(&mut self, out: &mut Vec<StreamEvent>) -> Result<()> {
        match alpha_calibration(&self.frames, &self.config)? {
            Some(baseline) => {
                self.config.alpha.validate()?;
                let tracker =
                    AlphaTracker::new(self.config.alpha, &baseline, self.config.psd_window_s);
                self.stage = AlphaStage::Tracking(baseline, tracker);
                for frame in self.frames.clone() {
                    self.track(&frame, out)?;
                }
            }
            None => self.stage = AlphaStage::Unavailable,
        }
        Ok(())
    }

    fn track(&mut self, frame: &BandPowerFrame, out: &mut Vec<StreamEvent>) -> Result<()> {
        let AlphaStage::Tracking(_, tracker) = &mut self.stage else {
            return Ok(());
        };
        if let Some(e) = tracker.push(frame)? {
            self.alpha.push(TimedAlpha::detected(e, &self.timing));
            out.push(StreamEvent::Alpha(e));
        }
        Ok(())
    }

    fn run_alarm(&mut self, finished: bool, out: &mut Vec<StreamEvent>) -> Result<()> {
        let mut alpha = self.alpha.clone();
        match &self.stage {
            AlphaStage::Calibrating => return Ok(()),
            AlphaStage::Tracking(_, tracker) if !finished => {
                alpha.extend(
                    tracker
                        .provisional()
                        .map(|e| TimedAlpha::detected(e, &self.timing)),
                );
            }
            _ => {}
        }
        while self.next_eval < self.frames.len() {
            let j = self.next_eval;
            let t = self.frames[j].window_start_s + self.timing.window_s;
            let ready = finished
                || (self.frames.len() > j + self.lookahead && self.blink.settled_until() > t + 1e-6);
            if !ready {
                break;
            }
            let base = self.blink_baseline_at(t);
            let (next, tr) =
                evaluate_at(t, &self.blinks, &alpha, &self.state, &self.config.alarm, base)?;
            self.state = next;
            if let Some(tr) = tr {
                self.transitions.push(tr);
                out.push(StreamEvent::Transition(tr));
            }
            self.next_eval += 1;
        }
        Ok(())
    }

    // The blink baseline is only consulted once the calibration span has
    // passed, by which point every blink inside it is known.
    fn blink_baseline_at(&mut self, t: f64) -> Option<BlinkBaseline> {
        if t < self.clean_start + self.config.calibration_s {
            return None;
        }
        *self.blink_base.get_or_insert_with(|| {
            blink_baseline(
                &self.blinks,
                self.clean_start,
                self.config.calibration_s,
                self.config.alarm.min_blinks_for_eval,
            )
        })
    }

    /// Flushes the filters and finalises all detections and evaluations.
    pub fn finish(mut self) -> Result<(Analysis, Vec<StreamEvent>)> {
        let mut out = Vec::new();
        let end = self.input_start + self.input_count as f64 / self.config.input_rate_hz;
        self.clean_limit = Some(samples_before(self.clean_start, self.rate, end));
        for _ in 0..self.lpf_flush {
            self.feed_raw(0.0, &mut out)?;
        }
        for _ in 0..self.hpf_flush {
            self.feed_reduced(0.0, &mut out)?;
        }
        if let Some(b) = self.blink.clone().finish() {
            self.blinks.push(b);
            out.push(StreamEvent::Blink(b));
        }
        if let AlphaStage::Calibrating = self.stage {
            self.calibrate(&mut out)?;
        }
        let alpha_baseline = match &self.stage {
            AlphaStage::Tracking(baseline, tracker) => {
                if let Some(e) = tracker.clone().finish() {
                    self.alpha.push(TimedAlpha::detected(e, &self.timing));
                    out.push(StreamEvent::Alpha(e));
                }
                Some(*baseline)
            }
            _ => None,
        };
        self.run_alarm(true, &mut out)?;

        let blink_base = blink_baseline(
            &self.blinks,
            self.clean_start,
            self.config.calibration_s,
            self.config.alarm.min_blinks_for_eval,
        );
        let meta = run_meta(
            &self.config,
            self.input_start,
            self.input_count,
            self.clean_start,
            &self.frames,
            &self.transitions,
            alpha_baseline.as_ref(),
            blink_base,
        );
        let analysis = Analysis {
            frames: self.frames,
            spectra: self.spectra,
            blinks: self.blinks,
            alpha_events: self.alpha.into_iter().map(|a| a.event).collect(),
            transitions: self.transitions,
            alpha_baseline,
            blink_baseline: blink_base,
            meta,
        };
        Ok((analysis, out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_io::{generate_synthetic, AlphaSpec, BlinkSpec, SyntheticScenario};

    fn scenario() -> SyntheticScenario {
        SyntheticScenario {
            duration_s: 50.0,
            blink_specs: (0..6)
                .map(|i| BlinkSpec {
                    onset_s: 4.0 + 7.0 * i as f64,
                    duration_s: 0.2 + 0.05 * i as f64,
                    peak_amplitude_uv: 200.0,
                })
                .collect(),
            alpha_specs: vec![AlphaSpec {
                onset_s: 36.0,
                duration_s: 8.0,
                amplitude_uv: 25.0,
                frequency_hz: 10.0,
            }],
            seed: 3,
            ..SyntheticScenario::default()
        }
    }

    #[test]
    fn preprocess_keeps_input_start_and_rate() {
        let (stream, _) = generate_synthetic(&scenario()).unwrap();
        let clean = preprocess(&stream, &AnalysisConfig::default()).unwrap();
        assert_eq!(clean.sample_rate(), 100.0);
        assert!(clean.start_time() >= 0.0 && clean.start_time() < 0.01);
    }

    #[test]
    fn streaming_matches_batch() {
        let (stream, _) = generate_synthetic(&scenario()).unwrap();
        let cfg = AnalysisConfig::default();
        let batch = analyze(&stream, &cfg).unwrap();
        assert!(!batch.blinks.is_empty());
        assert!(!batch.alpha_events.is_empty());
        for chunk in [1, 37, 250, 100_000] {
            let mut p = StreamingPipeline::new(cfg, stream.start_time()).unwrap();
            for c in stream.samples().chunks(chunk) {
                p.push_chunk(c).unwrap();
            }
            let (streamed, _) = p.finish().unwrap();
            assert_eq!(streamed, batch, "chunk {chunk}");
        }
    }

    #[test]
    fn short_input_covers_full_span_without_alpha() {
        let stream = SampleStream::new(500.0, vec![1.0; 1500]).unwrap();
        let cfg = AnalysisConfig::default();
        let clean = preprocess(&stream, &cfg).unwrap();
        assert_eq!(clean.len(), 300);
        let a = analyze(&stream, &cfg).unwrap();
        assert_eq!(a.alpha_baseline, None);
        assert!(a.alpha_events.is_empty());
        let mut p = StreamingPipeline::new(cfg, 0.0).unwrap();
        p.push_chunk(stream.samples()).unwrap();
        assert_eq!(p.finish().unwrap().0, a);
    }

    #[test]
    fn rate_mismatch_is_rejected() {
        let stream = SampleStream::new(250.0, vec![0.0; 1000]).unwrap();
        assert!(matches!(
            analyze(&stream, &AnalysisConfig::default()),
            Err(Error::RateMismatch { .. })
        ));
    }
}
