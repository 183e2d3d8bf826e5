use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowFn {
    /// Periodic Hann.
    #[default]
    Hann,
}

impl WindowFn {
    fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            WindowFn::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                .collect(),
        }
    }
}

/// One-sided power spectral density in µV²/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub bin_frequencies: Vec<f64>,
    pub power_density: Vec<f64>,
    pub resolution_hz: f64,
    pub window_start_s: f64,
}

impl Spectrum {
    pub fn max_frequency(&self) -> f64 {
        self.bin_frequencies.last().copied().unwrap_or(0.0)
    }

    /// Rectangle-rule integral over every bin.
    pub fn total_power(&self) -> f64 {
        self.power_density.iter().sum::<f64>() * self.resolution_hz
    }
}

/// Welch estimator with a cached FFT plan and window.
pub struct WelchEstimator {
    rate: f64,
    segment: usize,
    step: usize,
    window: Vec<f64>,
    scale: f64,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for WelchEstimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WelchEstimator")
            .field("rate", &self.rate)
            .field("segment", &self.segment)
            .field("step", &self.step)
            .finish()
    }
}

impl WelchEstimator {
    pub fn new(rate: f64, segment_s: f64, overlap_fraction: f64, window_fn: WindowFn) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::invalid("rate", "must be positive"));
        }
        if !(0.0..1.0).contains(&overlap_fraction) {
            return Err(Error::invalid("overlap_fraction", "must lie in [0, 1)"));
        }
        let segment = (segment_s * rate).round() as usize;
        if segment < 2 {
            return Err(Error::invalid("segment_s", "segment holds fewer than 2 samples"));
        }
        let overlap = (segment as f64 * overlap_fraction).round() as usize;
        let step = (segment - overlap).max(1);
        let window = window_fn.coefficients(segment);
        let power: f64 = window.iter().map(|w| w * w).sum();
        let fft = FftPlanner::new().plan_fft_forward(segment);
        Ok(Self {
            rate,
            segment,
            step,
            window,
            scale: 1.0 / (rate * power),
            fft,
        })
    }

    pub fn segment_len(&self) -> usize {
        self.segment
    }

    pub fn segment_count(&self, len: usize) -> usize {
        if len < self.segment {
            0
        } else {
            (len - self.segment) / self.step + 1
        }
    }

    pub fn estimate(&self, samples: &[f64], window_start_s: f64) -> Result<Spectrum> {
        let segments = self.segment_count(samples.len());
        if segments == 0 {
            return Err(Error::invalid(
                "window",
                format!(
                    "{} samples is shorter than one {}-sample segment",
                    samples.len(),
                    self.segment
                ),
            ));
        }
        let n = self.segment;
        let bins = n / 2 + 1;
        let mut acc = vec![0.0; bins];
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for s in 0..segments {
            let seg = &samples[s * self.step..s * self.step + n];
            for ((b, x), w) in buf.iter_mut().zip(seg).zip(&self.window) {
                *b = Complex::new(x * w, 0.0);
            }
            self.fft.process(&mut buf);
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += b.norm_sqr();
            }
        }
        let norm = self.scale / segments as f64;
        let power_density = acc
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let one_sided = if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
                    1.0
                } else {
                    2.0
                };
                a * norm * one_sided
            })
            .collect();
        let resolution_hz = self.rate / n as f64;
        Ok(Spectrum {
            bin_frequencies: (0..bins).map(|k| k as f64 * resolution_hz).collect(),
            power_density,
            resolution_hz,
            window_start_s,
        })
    }
}

/// Averaged Hann-windowed periodograms, scaled so the integral over
/// frequency equals the mean square of the input.
pub fn welch_psd(
    samples: &[f64],
    rate: f64,
    segment_s: f64,
    overlap_fraction: f64,
    window_fn: WindowFn,
) -> Result<Spectrum> {
    WelchEstimator::new(rate, segment_s, overlap_fraction, window_fn)?.estimate(samples, 0.0)
}

/// Rectangle-rule power over bins with `low_hz <= f < high_hz`.
pub fn band_power(spectrum: &Spectrum, low_hz: f64, high_hz: f64) -> Result<f64> {
    if !(low_hz >= 0.0 && low_hz < high_hz) {
        return Err(Error::invalid(
            "band",
            format!("need 0 <= low < high, got ({low_hz}, {high_hz})"),
        ));
    }
    if high_hz > spectrum.max_frequency() + 1e-9 {
        return Err(Error::invalid(
            "band",
            format!(
                "upper edge {high_hz} Hz above highest bin {} Hz",
                spectrum.max_frequency()
            ),
        ));
    }
    let eps = 1e-9 * spectrum.resolution_hz;
    let sum: f64 = spectrum
        .bin_frequencies
        .iter()
        .zip(&spectrum.power_density)
        .filter(|(f, _)| **f >= low_hz - eps && **f < high_hz - eps)
        .map(|(_, p)| p)
        .sum();
    Ok(sum * spectrum.resolution_hz)
}
