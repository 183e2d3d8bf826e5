use serde::{Deserialize, Serialize};

use super::welch::{band_power, Spectrum, WelchEstimator, WindowFn};
use crate::error::{Error, Result};
use crate::signal_io::{frame_stream, window_geometry, SampleStream};

pub const ALPHA_BAND: (f64, f64) = (8.0, 13.0);
pub const THETA_BAND: (f64, f64) = (4.0, 8.0);
pub const TOTAL_BAND: (f64, f64) = (0.5, 40.0);

/// Lowest stream rate whose Nyquist frequency still contains the total band.
const MIN_RATE_HZ: f64 = 2.0 * TOTAL_BAND.1;

/// Spectral summary of one analysis window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPowerFrame {
    pub window_start_s: f64,
    pub alpha_power_uv2: f64,
    pub theta_power_uv2: f64,
    pub total_power_uv2: f64,
    pub relative_alpha: f64,
    pub artifact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameConfig {
    pub window_s: f64,
    pub hop_s: f64,
    pub segment_s: f64,
    pub overlap_fraction: f64,
    /// Windows with any |sample| strictly above this are flagged.
    pub artifact_reject_uv: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            window_s: 2.0,
            hop_s: 0.5,
            segment_s: 1.0,
            overlap_fraction: 0.5,
            artifact_reject_uv: 50.0,
        }
    }
}

/// Turns raw analysis windows into [`BandPowerFrame`]s.
#[derive(Debug)]
pub struct FrameBuilder {
    welch: WelchEstimator,
    artifact_reject_uv: f64,
}

impl FrameBuilder {
    pub fn new(rate: f64, config: &FrameConfig) -> Result<Self> {
        if rate < MIN_RATE_HZ {
            return Err(Error::invalid(
                "sample_rate",
                format!("band-power frames need at least {MIN_RATE_HZ} Hz, got {rate}"),
            ));
        }
        window_geometry(config.window_s, config.hop_s, rate)?;
        if !(config.artifact_reject_uv > 0.0) {
            return Err(Error::invalid("artifact_reject_uv", "must be positive"));
        }
        let welch = WelchEstimator::new(
            rate,
            config.segment_s,
            config.overlap_fraction,
            WindowFn::Hann,
        )?;
        Ok(Self {
            welch,
            artifact_reject_uv: config.artifact_reject_uv,
        })
    }

    pub fn frame(&self, window_start_s: f64, samples: &[f64]) -> Result<BandPowerFrame> {
        Ok(self.frame_with_spectrum(window_start_s, samples)?.0)
    }

    /// The frame together with the spectrum it was measured on.
    pub fn frame_with_spectrum(
        &self,
        window_start_s: f64,
        samples: &[f64],
    ) -> Result<(BandPowerFrame, Spectrum)> {
        let spectrum = self.welch.estimate(samples, window_start_s)?;
        let alpha = band_power(&spectrum, ALPHA_BAND.0, ALPHA_BAND.1)?;
        let theta = band_power(&spectrum, THETA_BAND.0, THETA_BAND.1)?;
        let total = band_power(&spectrum, TOTAL_BAND.0, TOTAL_BAND.1)?;
        let relative_alpha = if total > 0.0 { alpha / total } else { 0.0 };
        let artifact = samples.iter().any(|v| v.abs() > self.artifact_reject_uv);
        let frame = BandPowerFrame {
            window_start_s,
            alpha_power_uv2: alpha,
            theta_power_uv2: theta,
            total_power_uv2: total,
            relative_alpha,
            artifact,
        };
        Ok((frame, spectrum))
    }
}

pub fn compute_band_power_frames(
    stream: &SampleStream,
    config: &FrameConfig,
) -> Result<Vec<BandPowerFrame>> {
    let builder = FrameBuilder::new(stream.sample_rate(), config)?;
    frame_stream(stream, config.window_s, config.hop_s)?
        .into_iter()
        .map(|w| builder.frame(w.start_s, w.samples))
        .collect()
}
