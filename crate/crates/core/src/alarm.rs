//! Three-level drowsiness alarm: blink duration (1), alpha bursts (2) and
//! sustained alpha (3). Levels rise immediately and fall only after a hold.
//!
//! Each level is latched for `level_hold_s` after the last evaluation that
//! satisfied it, and the reported level is the highest latched one. Falling
//! from 3 therefore lands on 2 or 1 when those were recently satisfied.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::alpha::{AlphaEvent, AlphaKind};
use crate::blink::{blink_statistics, BlinkEvent, BlinkStatistics};
use crate::dsp::BandPowerFrame;
use crate::error::{Error, Result};
use crate::signal_io::LabelledInterval;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlarmConfig {
    pub blink_duration_abs_s: f64,
    pub blink_duration_ratio: f64,
    pub blink_eval_window_s: f64,
    pub min_blinks_for_eval: usize,
    pub burst_count_threshold: usize,
    pub burst_count_window_s: f64,
    pub level_hold_s: f64,
}

impl Default for AlarmConfig {
    fn default() -> Self {
        Self {
            blink_duration_abs_s: 0.4,
            blink_duration_ratio: 1.5,
            blink_eval_window_s: 60.0,
            min_blinks_for_eval: 3,
            burst_count_threshold: 3,
            burst_count_window_s: 60.0,
            level_hold_s: 10.0,
        }
    }
}

impl AlarmConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alarm.blink_duration_abs_s", self.blink_duration_abs_s),
            ("alarm.blink_eval_window_s", self.blink_eval_window_s),
            ("alarm.burst_count_window_s", self.burst_count_window_s),
            ("alarm.level_hold_s", self.level_hold_s),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be positive"));
            }
        }
        if !(self.blink_duration_ratio > 1.0) {
            return Err(Error::invalid("alarm.blink_duration_ratio", "must exceed 1"));
        }
        if self.min_blinks_for_eval == 0 {
            return Err(Error::invalid("alarm.min_blinks_for_eval", "must be positive"));
        }
        if self.burst_count_threshold == 0 {
            return Err(Error::invalid("alarm.burst_count_threshold", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    #[default]
    None,
    BlinkDuration,
    AlphaBurst,
    SustainedAlpha,
}

impl Trigger {
    pub fn for_level(level: u8) -> Self {
        match level {
            0 => Trigger::None,
            1 => Trigger::BlinkDuration,
            2 => Trigger::AlphaBurst,
            _ => Trigger::SustainedAlpha,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Trigger::None => "none",
            Trigger::BlinkDuration => "blink_duration",
            Trigger::AlphaBurst => "alpha_burst",
            Trigger::SustainedAlpha => "sustained_alpha",
        }
    }
}

impl fmt::Display for Trigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlarmState {
    pub current_level: u8,
    pub since_s: f64,
    pub trigger: Trigger,
    /// Earliest time the current level may fall.
    pub hold_until_s: f64,
    last_eval_s: Option<f64>,
    /// Last evaluation at which each level 1..=3 was satisfied.
    satisfied_s: [f64; 3],
}

impl Default for AlarmState {
    fn default() -> Self {
        Self {
            current_level: 0,
            since_s: 0.0,
            trigger: Trigger::None,
            hold_until_s: f64::NEG_INFINITY,
            last_eval_s: None,
            satisfied_s: [f64::NEG_INFINITY; 3],
        }
    }
}

impl AlarmState {
    pub fn last_eval_s(&self) -> Option<f64> {
        self.last_eval_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlarmTransition {
    pub time_s: f64,
    pub from_level: u8,
    pub to_level: u8,
    pub trigger: Trigger,
}

/// Level satisfied at `time_s`, ignoring hysteresis.
pub fn candidate_level(
    time_s: f64,
    blink_stats: Option<&BlinkStatistics>,
    alpha_events_in_scope: &[AlphaEvent],
    config: &AlarmConfig,
    blink_baseline_mean_s: Option<f64>,
) -> u8 {
    let sustained = alpha_events_in_scope
        .iter()
        .any(|e| e.kind == AlphaKind::Sustained && e.onset_s <= time_s && time_s <= e.end_s());
    if sustained {
        return 3;
    }
    let window_start = time_s - config.burst_count_window_s;
    let bursts = alpha_events_in_scope
        .iter()
        .filter(|e| e.kind == AlphaKind::Burst && e.end_s() > window_start && e.end_s() <= time_s)
        .count();
    if bursts >= config.burst_count_threshold {
        return 2;
    }
    if let Some(st) = blink_stats {
        if st.event_count >= config.min_blinks_for_eval {
            let limit = match blink_baseline_mean_s {
                Some(b) => config.blink_duration_abs_s.max(config.blink_duration_ratio * b),
                None => config.blink_duration_abs_s,
            };
            if st.mean_duration_s.is_some_and(|m| m > limit) {
                return 1;
            }
        }
    }
    0
}

/// One step of the alarm state machine.
pub fn evaluate(
    time_s: f64,
    blink_stats: Option<&BlinkStatistics>,
    alpha_events_in_scope: &[AlphaEvent],
    state: &AlarmState,
    config: &AlarmConfig,
    blink_baseline_mean_s: Option<f64>,
) -> Result<(AlarmState, Option<AlarmTransition>)> {
    if let Some(prev) = state.last_eval_s {
        if time_s < prev {
            return Err(Error::TimeRegression {
                time_s,
                previous_s: prev,
            });
        }
    }
    let candidate = candidate_level(
        time_s,
        blink_stats,
        alpha_events_in_scope,
        config,
        blink_baseline_mean_s,
    );
    let mut next = AlarmState {
        last_eval_s: Some(time_s),
        ..*state
    };
    // each level stays latched for level_hold_s after it was last satisfied
    for slot in &mut next.satisfied_s[..usize::from(candidate)] {
        *slot = time_s;
    }
    let satisfied = next.satisfied_s;
    let held = |level: u8| satisfied[usize::from(level) - 1] + config.level_hold_s;
    let level = (1..=3u8).rev().find(|&k| time_s < held(k)).unwrap_or(0);
    if level > 0 {
        next.hold_until_s = held(level);
    }
    let current = state.current_level;
    if level == current {
        return Ok((next, None));
    }
    next.current_level = level;
    next.since_s = time_s;
    next.trigger = Trigger::for_level(level);
    let transition = AlarmTransition {
        time_s,
        from_level: current,
        to_level: level,
        trigger: next.trigger,
    };
    Ok((next, Some(transition)))
}

/// Analysis-window timing the timeline driver needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimelineTiming {
    pub window_s: f64,
    pub hop_s: f64,
    pub calibration_s: f64,
    pub sustained_min_s: f64,
}

impl Default for TimelineTiming {
    fn default() -> Self {
        Self {
            window_s: 2.0,
            hop_s: 0.5,
            calibration_s: 30.0,
            sustained_min_s: 5.0,
        }
    }
}

/// Mean blink duration over the calibration span, usable from `available_from_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlinkBaseline {
    pub mean_duration_s: f64,
    pub available_from_s: f64,
}

pub fn blink_baseline(
    events: &[BlinkEvent],
    start_s: f64,
    calibration_s: f64,
    min_blinks: usize,
) -> Option<BlinkBaseline> {
    let st = blink_statistics(events, start_s, calibration_s);
    (st.event_count >= min_blinks).then(|| BlinkBaseline {
        mean_duration_s: st.mean_duration_s.expect("non-empty"),
        available_from_s: start_s + calibration_s,
    })
}

/// An alpha event together with the first time its level contribution is
/// observable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedAlpha {
    pub event: AlphaEvent,
    pub known_at_s: f64,
}

impl TimedAlpha {
    /// Timing for an event produced by the frame-run detector.
    pub fn detected(event: AlphaEvent, timing: &TimelineTiming) -> Self {
        let known_at_s = match event.kind {
            AlphaKind::Burst => event.end_s(),
            AlphaKind::Sustained => event.onset_s + timing.window_s / 2.0 + timing.sustained_min_s,
        };
        Self { event, known_at_s }
    }
}

/// Alpha events visible at `time_s` whose span intersects the burst window.
pub fn events_in_scope(alpha: &[TimedAlpha], time_s: f64, config: &AlarmConfig) -> Vec<AlphaEvent> {
    let from = time_s - config.burst_count_window_s;
    alpha
        .iter()
        .filter(|a| a.known_at_s <= time_s && a.event.end_s() > from && a.event.onset_s <= time_s)
        .map(|a| a.event)
        .collect()
}

/// [`evaluate`] at `time_s` with statistics drawn from full event lists.
pub fn evaluate_at(
    time_s: f64,
    blinks: &[BlinkEvent],
    alpha: &[TimedAlpha],
    state: &AlarmState,
    config: &AlarmConfig,
    baseline: Option<BlinkBaseline>,
) -> Result<(AlarmState, Option<AlarmTransition>)> {
    let window = config.blink_eval_window_s;
    let stats = blink_statistics(blinks, time_s - window, window);
    let scope = events_in_scope(alpha, time_s, config);
    let base = baseline
        .filter(|b| time_s >= b.available_from_s)
        .map(|b| b.mean_duration_s);
    evaluate(time_s, Some(&stats), &scope, state, config, base)
}

/// Folds [`evaluate`] over `eval_times`, returning the state after each step
/// and every transition.
pub fn replay(
    eval_times: &[f64],
    blinks: &[BlinkEvent],
    alpha: &[TimedAlpha],
    config: &AlarmConfig,
    baseline: Option<BlinkBaseline>,
) -> Result<(Vec<AlarmState>, Vec<AlarmTransition>)> {
    config.validate()?;
    let mut state = AlarmState::default();
    let mut states = Vec::with_capacity(eval_times.len());
    let mut transitions = Vec::new();
    for &t in eval_times {
        let (next, tr) = evaluate_at(t, blinks, alpha, &state, config, baseline)?;
        state = next;
        states.push(state);
        transitions.extend(tr);
    }
    Ok((states, transitions))
}

/// Evaluation instants: the end of each frame's window.
pub fn frame_eval_times(frames: &[BandPowerFrame], window_s: f64) -> Vec<f64> {
    frames.iter().map(|f| f.window_start_s + window_s).collect()
}

/// Replays the alarm at every frame hop over detector output.
pub fn run_timeline(
    frames: &[BandPowerFrame],
    blink_events: &[BlinkEvent],
    alpha_events: &[AlphaEvent],
    config: &AlarmConfig,
    timing: &TimelineTiming,
    baseline: Option<BlinkBaseline>,
) -> Result<Vec<AlarmTransition>> {
    let times = frame_eval_times(frames, timing.window_s);
    let alpha: Vec<TimedAlpha> = alpha_events
        .iter()
        .map(|&e| TimedAlpha::detected(e, timing))
        .collect();
    Ok(replay(&times, blink_events, &alpha, config, baseline)?.1)
}

/// Level at `time_s` given change points `(time, level)`.
pub fn level_at(change_points: &[(f64, u8)], time_s: f64) -> u8 {
    change_points
        .iter()
        .take_while(|(t, _)| *t <= time_s)
        .last()
        .map_or(0, |&(_, l)| l)
}

/// The alarm timeline implied by ground-truth events, as change points.
pub fn reference_timeline(
    blinks: &[LabelledInterval],
    bursts: &[LabelledInterval],
    sustained: &[LabelledInterval],
    duration_s: f64,
    config: &AlarmConfig,
    timing: &TimelineTiming,
) -> Vec<(f64, u8)> {
    let blink_events: Vec<BlinkEvent> = blinks
        .iter()
        .map(|b| BlinkEvent {
            onset_s: b.onset_s,
            duration_s: b.duration_s,
            peak_amplitude_uv: b.magnitude_uv,
        })
        .collect();
    let mut alpha: Vec<TimedAlpha> = bursts
        .iter()
        .map(|b| TimedAlpha {
            event: AlphaEvent {
                kind: AlphaKind::Burst,
                onset_s: b.onset_s,
                duration_s: b.duration_s,
                mean_relative_alpha: 1.0,
            },
            known_at_s: b.end_s(),
        })
        .chain(sustained.iter().map(|s| TimedAlpha {
            event: AlphaEvent {
                kind: AlphaKind::Sustained,
                onset_s: s.onset_s,
                duration_s: s.duration_s,
                mean_relative_alpha: 1.0,
            },
            known_at_s: s.onset_s + timing.sustained_min_s,
        }))
        .collect();
    alpha.sort_by(|a, b| a.event.onset_s.total_cmp(&b.event.onset_s));
    let mut times = Vec::new();
    let mut k = 0usize;
    loop {
        let t = timing.window_s + k as f64 * timing.hop_s;
        if t > duration_s + 1e-9 {
            break;
        }
        times.push(t);
        k += 1;
    }
    let baseline = blink_baseline(&blink_events, 0.0, timing.calibration_s, config.min_blinks_for_eval);
    match replay(&times, &blink_events, &alpha, config, baseline) {
        Ok((_, transitions)) => transitions.iter().map(|t| (t.time_s, t.to_level)).collect(),
        Err(_) => Vec::new(),
    }
}
