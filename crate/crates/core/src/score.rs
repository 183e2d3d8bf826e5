//! Scoring detector output against ground truth.

use serde::{Deserialize, Serialize};

use crate::alarm::level_at;
use crate::alpha::AlphaKind;
use crate::output::Record;

/// One event reduced to what scoring needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub onset_s: f64,
    pub duration_s: f64,
}

/// Greedy onset matching over onset-sorted lists. A truth event matches the
/// earliest unmatched detection within `tolerance_s` of its onset; in one
/// dimension with a shared tolerance this is a maximum matching.
pub fn match_by_onset(detected: &[Interval], truth: &[Interval], tolerance_s: f64) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    let mut j = 0;
    for (i, t) in truth.iter().enumerate() {
        while j < detected.len() && detected[j].onset_s < t.onset_s - tolerance_s {
            j += 1;
        }
        if j < detected.len() && detected[j].onset_s <= t.onset_s + tolerance_s {
            pairs.push((j, i));
            j += 1;
        }
    }
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventScore {
    pub detected: usize,
    pub truth: usize,
    pub matched: usize,
    /// 1.0 when nothing was detected; see `no_detections`.
    pub precision: f64,
    /// 1.0 when there is no truth to recall.
    pub recall: f64,
    pub duration_mae_s: Option<f64>,
    pub no_detections: bool,
}

pub fn score_events(detected: &[Interval], truth: &[Interval], tolerance_s: f64) -> EventScore {
    let mut detected = detected.to_vec();
    let mut truth = truth.to_vec();
    detected.sort_by(|a, b| a.onset_s.total_cmp(&b.onset_s));
    truth.sort_by(|a, b| a.onset_s.total_cmp(&b.onset_s));
    let pairs = match_by_onset(&detected, &truth, tolerance_s);
    let matched = pairs.len();
    let ratio = |n: usize, d: usize| if d == 0 { 1.0 } else { n as f64 / d as f64 };
    let mae = (!pairs.is_empty()).then(|| {
        pairs
            .iter()
            .map(|&(d, t)| (detected[d].duration_s - truth[t].duration_s).abs())
            .sum::<f64>()
            / matched as f64
    });
    EventScore {
        detected: detected.len(),
        truth: truth.len(),
        matched,
        precision: ratio(matched, detected.len()),
        recall: ratio(matched, truth.len()),
        duration_mae_s: mae,
        no_detections: detected.is_empty(),
    }
}

/// Fraction of `eval_times` at which both change-point timelines agree.
pub fn alarm_agreement(detected: &[(f64, u8)], expected: &[(f64, u8)], eval_times: &[f64]) -> f64 {
    if eval_times.is_empty() {
        return 1.0;
    }
    let agree = eval_times
        .iter()
        .filter(|&&t| level_at(detected, t) == level_at(expected, t))
        .count();
    agree as f64 / eval_times.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub blink: EventScore,
    pub alpha_burst: EventScore,
    pub sustained_alpha: EventScore,
    pub alarm_agreement: f64,
    pub evaluated_hops: usize,
    pub tolerance_s: f64,
    /// Alpha onsets are matched within `tolerance_s` plus one analysis window.
    pub alpha_tolerance_s: f64,
    /// Scores are against synthetic ground truth only.
    pub synthetic_only: bool,
    pub note: String,
}

/// Events and alarm change points of one side of a comparison.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventSets {
    pub blinks: Vec<Interval>,
    pub bursts: Vec<Interval>,
    pub sustained: Vec<Interval>,
    pub timeline: Vec<(f64, u8)>,
}

impl EventSets {
    /// Collects events, `alarm` transitions and `expected_level` points.
    pub fn from_records(records: &[Record]) -> Self {
        let mut sets = Self::default();
        for r in records {
            match *r {
                Record::Blink {
                    onset_s,
                    duration_s,
                    ..
                } => sets.blinks.push(Interval {
                    onset_s,
                    duration_s,
                }),
                Record::Alpha {
                    kind,
                    onset_s,
                    duration_s,
                    ..
                } => {
                    let iv = Interval {
                        onset_s,
                        duration_s,
                    };
                    match kind {
                        AlphaKind::Burst => sets.bursts.push(iv),
                        AlphaKind::Sustained => sets.sustained.push(iv),
                    }
                }
                Record::Alarm { time_s, to, .. } => sets.timeline.push((time_s, to)),
                Record::ExpectedLevel { time_s, level } => sets.timeline.push((time_s, level)),
                Record::Scenario { .. } => {}
            }
        }
        sets.timeline.sort_by(|a, b| a.0.total_cmp(&b.0));
        sets
    }
}

pub fn score(
    detected: &EventSets,
    truth: &EventSets,
    eval_times: &[f64],
    tolerance_s: f64,
    window_s: f64,
) -> ScoreReport {
    let alpha_tolerance_s = tolerance_s + window_s;
    ScoreReport {
        blink: score_events(&detected.blinks, &truth.blinks, tolerance_s),
        alpha_burst: score_events(&detected.bursts, &truth.bursts, alpha_tolerance_s),
        sustained_alpha: score_events(&detected.sustained, &truth.sustained, alpha_tolerance_s),
        alarm_agreement: alarm_agreement(&detected.timeline, &truth.timeline, eval_times),
        evaluated_hops: eval_times.len(),
        tolerance_s,
        alpha_tolerance_s,
        synthetic_only: true,
        note: "agreement is measured against synthetic ground truth; precision is 1.0 \
               by convention when there are no detections (see no_detections)"
            .into(),
    }
}
