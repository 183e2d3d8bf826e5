//! Analysis configuration and its flat `key = value` file format.
//!
//! Every field has a default, so a config file only lists overrides. Nested
//! detector settings use dotted keys such as `alarm.level_hold_s`. Unknown
//! and repeated keys are rejected.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::alarm::{AlarmConfig, TimelineTiming};
use crate::alpha::AlphaConfig;
use crate::blink::BlinkConfig;
use crate::dsp::FrameConfig;
use crate::error::{Error, Result};
use crate::kv;
use crate::signal_io::DEFAULT_SAMPLE_RATE_HZ;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    pub input_rate_hz: f64,
    pub lpf_corner_hz: f64,
    pub lpf_taps: usize,
    pub hpf_corner_hz: f64,
    pub hpf_taps: usize,
    pub decim_factor: usize,
    pub psd_window_s: f64,
    pub psd_hop_s: f64,
    pub artifact_reject_uv: f64,
    /// Leading span used for the alpha and blink baselines.
    pub calibration_s: f64,
    pub blink: BlinkConfig,
    pub alpha: AlphaConfig,
    pub alarm: AlarmConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            input_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            lpf_corner_hz: 30.0,
            lpf_taps: 100,
            hpf_corner_hz: 0.25,
            hpf_taps: 1001,
            decim_factor: 5,
            psd_window_s: 2.0,
            psd_hop_s: 0.5,
            artifact_reject_uv: 50.0,
            calibration_s: 30.0,
            blink: BlinkConfig::default(),
            alpha: AlphaConfig::default(),
            alarm: AlarmConfig::default(),
        }
    }
}

enum Slot<'a> {
    Real(&'a mut f64),
    Count(&'a mut usize),
}

macro_rules! slots {
    ($cfg:expr, { $($key:literal => $kind:ident $($field:ident).+),* $(,)? }) => {
        vec![$(($key, Slot::$kind(&mut $cfg.$($field).+))),*]
    };
}

impl AnalysisConfig {
    fn slots(&mut self) -> Vec<(&'static str, Slot<'_>)> {
        slots!(self, {
            "input_rate_hz" => Real input_rate_hz,
            "lpf_corner_hz" => Real lpf_corner_hz,
            "lpf_taps" => Count lpf_taps,
            "hpf_corner_hz" => Real hpf_corner_hz,
            "hpf_taps" => Count hpf_taps,
            "decim_factor" => Count decim_factor,
            "psd_window_s" => Real psd_window_s,
            "psd_hop_s" => Real psd_hop_s,
            "artifact_reject_uv" => Real artifact_reject_uv,
            "calibration_s" => Real calibration_s,
            "blink.amplitude_threshold_uv" => Real blink.amplitude_threshold_uv,
            "blink.merge_gap_s" => Real blink.merge_gap_s,
            "blink.band_low_hz" => Real blink.band_low_hz,
            "blink.band_high_hz" => Real blink.band_high_hz,
            "blink.filter_span_s" => Real blink.filter_span_s,
            "blink.min_duration_s" => Real blink.min_duration_s,
            "blink.max_duration_s" => Real blink.max_duration_s,
            "alpha.ratio_multiplier" => Real alpha.ratio_multiplier,
            "alpha.absolute_floor" => Real alpha.absolute_floor,
            "alpha.min_burst_s" => Real alpha.min_burst_s,
            "alpha.max_burst_s" => Real alpha.max_burst_s,
            "alpha.sustained_min_s" => Real alpha.sustained_min_s,
            "alarm.blink_duration_abs_s" => Real alarm.blink_duration_abs_s,
            "alarm.blink_duration_ratio" => Real alarm.blink_duration_ratio,
            "alarm.blink_eval_window_s" => Real alarm.blink_eval_window_s,
            "alarm.min_blinks_for_eval" => Count alarm.min_blinks_for_eval,
            "alarm.burst_count_threshold" => Count alarm.burst_count_threshold,
            "alarm.burst_count_window_s" => Real alarm.burst_count_window_s,
            "alarm.level_hold_s" => Real alarm.level_hold_s,
        })
    }

    /// Parses overrides on top of the defaults, then validates.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        for entry in kv::parse(text)? {
            if !seen.insert(entry.key) {
                return Err(entry.error("repeated key"));
            }
            let mut slots = cfg.slots();
            let slot = slots
                .iter_mut()
                .find(|(k, _)| *k == entry.key)
                .map(|(_, s)| s)
                .ok_or_else(|| entry.error("unknown key"))?;
            match slot {
                Slot::Real(v) => **v = entry.number()?,
                Slot::Count(v) => **v = entry.count()?,
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Every key with its current value; re-parses to an equal config.
    pub fn to_text(&self) -> String {
        let mut copy = *self;
        let mut out = String::new();
        for (key, slot) in copy.slots() {
            let _ = match slot {
                Slot::Real(v) => writeln!(out, "{key} = {v}"),
                Slot::Count(v) => writeln!(out, "{key} = {v}"),
            };
        }
        out
    }

    /// Rate after decimation, where frames and detectors run.
    pub fn analysis_rate_hz(&self) -> f64 {
        self.input_rate_hz / self.decim_factor as f64
    }

    pub fn frame_config(&self) -> FrameConfig {
        FrameConfig {
            window_s: self.psd_window_s,
            hop_s: self.psd_hop_s,
            artifact_reject_uv: self.artifact_reject_uv,
            ..FrameConfig::default()
        }
    }

    pub fn timing(&self) -> TimelineTiming {
        TimelineTiming {
            window_s: self.psd_window_s,
            hop_s: self.psd_hop_s,
            calibration_s: self.calibration_s,
            sustained_min_s: self.alpha.sustained_min_s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("input_rate_hz", self.input_rate_hz),
            ("lpf_corner_hz", self.lpf_corner_hz),
            ("hpf_corner_hz", self.hpf_corner_hz),
            ("psd_window_s", self.psd_window_s),
            ("psd_hop_s", self.psd_hop_s),
            ("artifact_reject_uv", self.artifact_reject_uv),
            ("calibration_s", self.calibration_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be positive"));
            }
        }
        if self.decim_factor == 0 {
            return Err(Error::invalid("decim_factor", "must be at least 1"));
        }
        if self.lpf_taps < 3 {
            return Err(Error::invalid("lpf_taps", "must be at least 3"));
        }
        if self.hpf_taps < 3 {
            return Err(Error::invalid("hpf_taps", "must be at least 3"));
        }
        let input_nyquist = self.input_rate_hz / 2.0;
        if self.lpf_corner_hz >= input_nyquist {
            return Err(Error::invalid(
                "lpf_corner_hz",
                format!("must be below the input Nyquist frequency {input_nyquist} Hz"),
            ));
        }
        let nyquist = self.analysis_rate_hz() / 2.0;
        if self.lpf_corner_hz >= nyquist {
            return Err(Error::invalid(
                "lpf_corner_hz",
                format!("must be below the decimated Nyquist frequency {nyquist} Hz"),
            ));
        }
        if self.hpf_corner_hz >= nyquist {
            return Err(Error::invalid(
                "hpf_corner_hz",
                format!("must be below the decimated Nyquist frequency {nyquist} Hz"),
            ));
        }
        if self.blink.band_high_hz >= nyquist {
            return Err(Error::invalid(
                "blink.band_high_hz",
                format!("must be below the decimated Nyquist frequency {nyquist} Hz"),
            ));
        }
        if self.psd_hop_s > self.psd_window_s {
            return Err(Error::invalid("psd_hop_s", "must not exceed psd_window_s"));
        }
        self.blink.validate()?;
        self.alpha.validate()?;
        self.alarm.validate()
    }
}
