use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::SampleStream;
use crate::alarm::{reference_timeline, AlarmConfig, TimelineTiming};
use crate::dsp::{apply_fir, design_bandpass};
use crate::error::{Error, Result};
use crate::kv;

const NOISE_BAND_HZ: (f64, f64) = (0.5, 40.0);
const ALPHA_RAMP_S: f64 = 0.1;
const SPIKE_WIDTH_S: f64 = 0.04;

/// A blink whose half-amplitude interval is `[onset_s, onset_s + duration_s]`.
/// The raised-cosine bump itself spans twice the duration, starting
/// `duration_s / 2` before the onset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlinkSpec {
    pub onset_s: f64,
    pub duration_s: f64,
    pub peak_amplitude_uv: f64,
}

impl BlinkSpec {
    fn support(&self) -> (f64, f64) {
        (
            self.onset_s - self.duration_s / 2.0,
            self.onset_s + 1.5 * self.duration_s,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaSpec {
    pub onset_s: f64,
    pub duration_s: f64,
    pub amplitude_uv: f64,
    pub frequency_hz: f64,
}

/// A short out-of-range deflection centred on `onset_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArtifactSpec {
    pub onset_s: f64,
    pub amplitude_uv: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScenario {
    pub duration_s: f64,
    pub sample_rate: f64,
    pub background_noise_uv_rms: f64,
    pub blink_specs: Vec<BlinkSpec>,
    pub alpha_specs: Vec<AlphaSpec>,
    pub artifact_specs: Vec<ArtifactSpec>,
    pub seed: u64,
}

impl Default for SyntheticScenario {
    fn default() -> Self {
        Self {
            duration_s: 60.0,
            sample_rate: super::DEFAULT_SAMPLE_RATE_HZ,
            background_noise_uv_rms: 10.0,
            blink_specs: Vec::new(),
            alpha_specs: Vec::new(),
            artifact_specs: Vec::new(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelledInterval {
    pub onset_s: f64,
    pub duration_s: f64,
    /// Blink peak or alpha amplitude, µV.
    pub magnitude_uv: f64,
}

impl LabelledInterval {
    pub fn end_s(&self) -> f64 {
        self.onset_s + self.duration_s
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruthLabels {
    pub blink_events: Vec<LabelledInterval>,
    pub alpha_burst_events: Vec<LabelledInterval>,
    pub sustained_alpha_events: Vec<LabelledInterval>,
    /// Level change points `(time_s, level)`; level 0 before the first entry.
    pub expected_alarm_timeline: Vec<(f64, u8)>,
}

fn bad(field: String, message: impl Into<String>) -> Error {
    Error::Invalid {
        field,
        message: message.into(),
    }
}

impl SyntheticScenario {
    pub fn validate(&self) -> Result<()> {
        let d = self.duration_s;
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::invalid("duration_s", "must be positive"));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::invalid("sample_rate", "must be positive"));
        }
        if !(self.background_noise_uv_rms >= 0.0 && self.background_noise_uv_rms.is_finite()) {
            return Err(Error::invalid(
                "background_noise_uv_rms",
                "must be non-negative",
            ));
        }
        let inside = |a: f64, b: f64| a >= 0.0 && b <= d + 1e-9;
        for (i, b) in self.blink_specs.iter().enumerate() {
            let field = format!("blink[{i}]");
            if !(0.05..=1.0).contains(&b.duration_s) {
                return Err(bad(field, "duration must lie in [0.05, 1.0] s"));
            }
            if !(b.peak_amplitude_uv > 0.0) {
                return Err(bad(field, "peak amplitude must be positive"));
            }
            let (a, e) = b.support();
            if !inside(a, e) {
                return Err(bad(
                    field,
                    format!("waveform [{a:.3}, {e:.3}] s extends past [0, duration_s]"),
                ));
            }
        }
        for (i, s) in self.alpha_specs.iter().enumerate() {
            let field = format!("alpha[{i}]");
            if !(8.0..=13.0).contains(&s.frequency_hz) {
                return Err(bad(field, "frequency must lie in [8, 13] Hz"));
            }
            if !(s.duration_s > 0.0) {
                return Err(bad(field, "duration must be positive"));
            }
            if !(s.amplitude_uv >= 0.0) {
                return Err(bad(field, "amplitude must be non-negative"));
            }
            if !inside(s.onset_s, s.onset_s + s.duration_s) {
                return Err(bad(field, "extends past [0, duration_s]"));
            }
        }
        for (i, s) in self.artifact_specs.iter().enumerate() {
            let half = SPIKE_WIDTH_S / 2.0;
            if !inside(s.onset_s - half, s.onset_s + half) {
                return Err(bad(format!("artifact[{i}]"), "extends past [0, duration_s]"));
            }
        }
        check_disjoint(
            "blink",
            self.blink_specs.iter().map(|b| b.support()).collect(),
        )?;
        check_disjoint(
            "alpha",
            self.alpha_specs
                .iter()
                .map(|a| (a.onset_s, a.onset_s + a.duration_s))
                .collect(),
        )?;
        Ok(())
    }

    /// Parses the flat scenario format:
    ///
    /// ```text
    /// duration_s = 60
    /// sample_rate = 500
    /// background_noise_uv_rms = 10
    /// seed = 42
    /// blink = <onset_s>, <duration_s>, <peak_uv>
    /// alpha = <onset_s>, <duration_s>, <amplitude_uv>, <frequency_hz>
    /// artifact = <onset_s>, <amplitude_uv>
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = SyntheticScenario::default();
        for e in kv::parse(text)? {
            match e.key {
                "duration_s" => s.duration_s = e.number()?,
                "sample_rate" => s.sample_rate = e.number()?,
                "background_noise_uv_rms" => s.background_noise_uv_rms = e.number()?,
                "seed" => s.seed = e.unsigned()?,
                "blink" => {
                    let v = e.tuple(3)?;
                    s.blink_specs.push(BlinkSpec {
                        onset_s: v[0],
                        duration_s: v[1],
                        peak_amplitude_uv: v[2],
                    });
                }
                "alpha" => {
                    let v = e.tuple(4)?;
                    s.alpha_specs.push(AlphaSpec {
                        onset_s: v[0],
                        duration_s: v[1],
                        amplitude_uv: v[2],
                        frequency_hz: v[3],
                    });
                }
                "artifact" => {
                    let v = e.tuple(2)?;
                    s.artifact_specs.push(ArtifactSpec {
                        onset_s: v[0],
                        amplitude_uv: v[1],
                    });
                }
                _ => return Err(e.error("unknown key")),
            }
        }
        Ok(s)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "duration_s = {}\nsample_rate = {}\nbackground_noise_uv_rms = {}\nseed = {}\n",
            self.duration_s, self.sample_rate, self.background_noise_uv_rms, self.seed
        );
        for b in &self.blink_specs {
            out += &format!(
                "blink = {}, {}, {}\n",
                b.onset_s, b.duration_s, b.peak_amplitude_uv
            );
        }
        for a in &self.alpha_specs {
            out += &format!(
                "alpha = {}, {}, {}, {}\n",
                a.onset_s, a.duration_s, a.amplitude_uv, a.frequency_hz
            );
        }
        for a in &self.artifact_specs {
            out += &format!("artifact = {}, {}\n", a.onset_s, a.amplitude_uv);
        }
        out
    }
}

fn check_disjoint(kind: &str, mut spans: Vec<(f64, f64)>) -> Result<()> {
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (i, w) in spans.windows(2).enumerate() {
        if w[1].0 < w[0].1 {
            return Err(bad(
                format!("{kind}[{}]", i + 1),
                format!("overlaps the event starting at {:.3} s", w[0].0),
            ));
        }
    }
    Ok(())
}

fn raised_cosine(x: f64) -> f64 {
    // 1 at x = 0, 0 at |x| >= 1
    if x.abs() >= 1.0 {
        0.0
    } else {
        0.5 * (1.0 + (PI * x).cos())
    }
}

fn background(scenario: &SyntheticScenario, n: usize) -> Result<Vec<f64>> {
    if scenario.background_noise_uv_rms == 0.0 || n == 0 {
        return Ok(vec![0.0; n]);
    }
    let rate = scenario.sample_rate;
    let high = NOISE_BAND_HZ.1.min(0.45 * rate);
    let taps = ((2.0 * rate).round() as usize).max(3);
    let filter = design_bandpass(NOISE_BAND_HZ.0, high, taps, rate)?;
    let pad = filter.len();
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let white: Vec<f64> = (0..n + pad)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let shaped = apply_fir(&filter, &SampleStream::new(rate, white)?)?.into_samples();
    let mut out = shaped[pad..].to_vec();
    let rms = (out.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    let gain = scenario.background_noise_uv_rms / rms;
    out.iter_mut().for_each(|v| *v *= gain);
    Ok(out)
}

/// Renders a scenario into a stream plus the labels of exactly what was
/// injected. Deterministic in the scenario, including its seed.
pub fn generate_synthetic(
    scenario: &SyntheticScenario,
) -> Result<(SampleStream, GroundTruthLabels)> {
    scenario.validate()?;
    let rate = scenario.sample_rate;
    let n = (scenario.duration_s * rate).round() as usize;
    let mut x = background(scenario, n)?;
    let t = |i: usize| i as f64 / rate;
    let index_range = |a: f64, b: f64| {
        let lo = (a * rate).floor().max(0.0) as usize;
        let hi = ((b * rate).ceil() as usize + 1).min(n);
        lo..hi
    };

    for b in &scenario.blink_specs {
        let centre = b.onset_s + b.duration_s / 2.0;
        let (a, e) = b.support();
        for i in index_range(a, e) {
            x[i] += b.peak_amplitude_uv * raised_cosine((t(i) - centre) / b.duration_s);
        }
    }
    for s in &scenario.alpha_specs {
        let end = s.onset_s + s.duration_s;
        let ramp = ALPHA_RAMP_S.min(s.duration_s / 2.0);
        for i in index_range(s.onset_s, end) {
            let ti = t(i);
            if ti < s.onset_s || ti > end {
                continue;
            }
            let edge = (ti - s.onset_s).min(end - ti);
            let env = if edge >= ramp {
                1.0
            } else {
                0.5 * (1.0 - (PI * edge / ramp).cos())
            };
            x[i] += s.amplitude_uv * env * (2.0 * PI * s.frequency_hz * (ti - s.onset_s)).sin();
        }
    }
    for s in &scenario.artifact_specs {
        let half = SPIKE_WIDTH_S / 2.0;
        for i in index_range(s.onset_s - half, s.onset_s + half) {
            x[i] += s.amplitude_uv * raised_cosine((t(i) - s.onset_s) / half);
        }
    }

    let labels = label(scenario);
    Ok((SampleStream::new(rate, x)?, labels))
}

fn label(scenario: &SyntheticScenario) -> GroundTruthLabels {
    let timing = TimelineTiming::default();
    let mut blinks: Vec<LabelledInterval> = scenario
        .blink_specs
        .iter()
        .map(|b| LabelledInterval {
            onset_s: b.onset_s,
            duration_s: b.duration_s,
            magnitude_uv: b.peak_amplitude_uv,
        })
        .collect();
    blinks.sort_by(|a, b| a.onset_s.total_cmp(&b.onset_s));
    let mut alpha: Vec<LabelledInterval> = scenario
        .alpha_specs
        .iter()
        .map(|a| LabelledInterval {
            onset_s: a.onset_s,
            duration_s: a.duration_s,
            magnitude_uv: a.amplitude_uv,
        })
        .collect();
    alpha.sort_by(|a, b| a.onset_s.total_cmp(&b.onset_s));
    let (sustained, bursts): (Vec<_>, Vec<_>) = alpha
        .into_iter()
        .partition(|a| a.duration_s >= timing.sustained_min_s);
    let expected = reference_timeline(
        &blinks,
        &bursts,
        &sustained,
        scenario.duration_s,
        &AlarmConfig::default(),
        &timing,
    );
    GroundTruthLabels {
        blink_events: blinks,
        alpha_burst_events: bursts,
        sustained_alpha_events: sustained,
        expected_alarm_timeline: expected,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blink(onset: f64, dur: f64, peak: f64) -> BlinkSpec {
        BlinkSpec {
            onset_s: onset,
            duration_s: dur,
            peak_amplitude_uv: peak,
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let sc = SyntheticScenario {
            seed: 42,
            blink_specs: vec![blink(3.0, 0.3, 150.0)],
            ..Default::default()
        };
        let (a, la) = generate_synthetic(&sc).unwrap();
        let (b, lb) = generate_synthetic(&sc).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
        let (c, _) = generate_synthetic(&SyntheticScenario { seed: 43, ..sc }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn background_only_length_and_rms() {
        let sc = SyntheticScenario {
            duration_s: 60.0,
            sample_rate: 250.0,
            ..Default::default()
        };
        let (s, labels) = generate_synthetic(&sc).unwrap();
        assert_eq!(s.len(), 15000);
        assert!(labels.blink_events.is_empty());
        assert!(labels.alpha_burst_events.is_empty());
        assert!(labels.sustained_alpha_events.is_empty());
        assert!(labels.expected_alarm_timeline.is_empty());
        let rms = (s.samples().iter().map(|v| v * v).sum::<f64>() / s.len() as f64).sqrt();
        assert!((rms - 10.0).abs() < 1e-9);
    }

    #[test]
    fn blink_labels_match_specs() {
        let specs: Vec<BlinkSpec> = (0..5).map(|k| blink(2.0 + 3.0 * k as f64, 0.25, 150.0)).collect();
        let sc = SyntheticScenario {
            duration_s: 20.0,
            blink_specs: specs.clone(),
            ..Default::default()
        };
        let (_, labels) = generate_synthetic(&sc).unwrap();
        assert_eq!(labels.blink_events.len(), 5);
        for (l, s) in labels.blink_events.iter().zip(&specs) {
            assert_eq!(l.onset_s, s.onset_s);
            assert_eq!(l.duration_s, s.duration_s);
            assert_eq!(l.magnitude_uv, s.peak_amplitude_uv);
        }
    }

    #[test]
    fn noiseless_blink_half_width() {
        let sc = SyntheticScenario {
            duration_s: 4.0,
            sample_rate: 1000.0,
            background_noise_uv_rms: 0.0,
            blink_specs: vec![blink(1.0, 0.3, 100.0)],
            ..Default::default()
        };
        let (s, _) = generate_synthetic(&sc).unwrap();
        let above: Vec<usize> = (0..s.len()).filter(|&i| s.samples()[i] >= 50.0).collect();
        let first = s.time_of(above[0]);
        let last = s.time_of(*above.last().unwrap());
        assert!((first - 1.0).abs() <= 0.0015);
        assert!((last - 1.3).abs() <= 0.0015);
        let peak = s.samples().iter().cloned().fold(0.0, f64::max);
        assert!((peak - 100.0).abs() < 1e-6);
    }

    #[test]
    fn alpha_variance_matches_amplitude() {
        let sc = SyntheticScenario {
            duration_s: 10.0,
            sample_rate: 250.0,
            background_noise_uv_rms: 0.0,
            alpha_specs: vec![AlphaSpec {
                onset_s: 2.0,
                duration_s: 5.0,
                amplitude_uv: 20.0,
                frequency_hz: 10.0,
            }],
            ..Default::default()
        };
        let (s, _) = generate_synthetic(&sc).unwrap();
        let seg = &s.samples()[(2.1 * 250.0) as usize..(6.9 * 250.0) as usize];
        let mean = seg.iter().sum::<f64>() / seg.len() as f64;
        let var = seg.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / seg.len() as f64;
        assert!((var - 200.0).abs() / 200.0 < 0.03, "var {var}");
    }

    #[test]
    fn validation_names_offending_entry() {
        let sc = SyntheticScenario {
            duration_s: 10.0,
            blink_specs: vec![blink(2.0, 0.2, 100.0), blink(9.8, 0.3, 100.0)],
            ..Default::default()
        };
        match generate_synthetic(&sc) {
            Err(Error::Invalid { field, .. }) => assert_eq!(field, "blink[1]"),
            other => panic!("unexpected {other:?}"),
        }
        let sc = SyntheticScenario {
            alpha_specs: vec![AlphaSpec {
                onset_s: 1.0,
                duration_s: 1.0,
                amplitude_uv: 10.0,
                frequency_hz: 20.0,
            }],
            ..Default::default()
        };
        assert!(matches!(sc.validate(), Err(Error::Invalid { field, .. }) if field == "alpha[0]"));
        let sc = SyntheticScenario {
            blink_specs: vec![blink(2.0, 1.5, 100.0)],
            ..Default::default()
        };
        assert!(sc.validate().is_err());
    }

    #[test]
    fn scenario_text_round_trip() {
        let sc = SyntheticScenario {
            duration_s: 30.0,
            sample_rate: 250.0,
            background_noise_uv_rms: 7.5,
            seed: 9,
            blink_specs: vec![blink(2.0, 0.25, 150.0)],
            alpha_specs: vec![AlphaSpec {
                onset_s: 10.0,
                duration_s: 1.5,
                amplitude_uv: 12.0,
                frequency_hz: 10.0,
            }],
            artifact_specs: vec![ArtifactSpec {
                onset_s: 20.0,
                amplitude_uv: -80.0,
            }],
        };
        assert_eq!(SyntheticScenario::parse(&sc.to_text()).unwrap(), sc);
        assert!(SyntheticScenario::parse("bogus = 1\n").is_err());
    }
}
