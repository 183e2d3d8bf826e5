use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::signal_io::SampleStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    Lowpass,
    Highpass,
    Bandpass,
}

/// Immutable symmetric (linear-phase) FIR filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    taps: Vec<f64>,
    design_rate: f64,
    kind: FilterKind,
    corner_hz: f64,
    upper_hz: Option<f64>,
}

impl FirFilter {
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn design_rate(&self) -> f64 {
        self.design_rate
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    /// Cut frequency; the lower edge for a bandpass.
    pub fn corner_hz(&self) -> f64 {
        self.corner_hz
    }

    /// Upper edge, bandpass filters only.
    pub fn upper_hz(&self) -> Option<f64> {
        self.upper_hz
    }

    /// Group delay in samples, `(N - 1) / 2`.
    pub fn group_delay_samples(&self) -> f64 {
        (self.taps.len() as f64 - 1.0) / 2.0
    }

    pub fn group_delay_s(&self) -> f64 {
        self.group_delay_samples() / self.design_rate
    }
}

fn check_corner(field: &str, corner_hz: f64, rate: f64) -> Result<()> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::invalid("rate", "must be positive"));
    }
    if !(corner_hz > 0.0 && corner_hz < rate / 2.0) {
        return Err(Error::invalid(
            field,
            format!(
                "{corner_hz} Hz must lie strictly between 0 and Nyquist ({} Hz)",
                rate / 2.0
            ),
        ));
    }
    Ok(())
}

/// Hamming-windowed sinc lowpass normalised to unity DC gain. The first half
/// is computed and mirrored so the taps are exactly symmetric.
fn windowed_sinc(cutoff_hz: f64, num_taps: usize, rate: f64) -> Vec<f64> {
    let fc = cutoff_hz / rate;
    let m = (num_taps - 1) as f64;
    let mut taps = vec![0.0; num_taps];
    for n in 0..num_taps.div_ceil(2) {
        let x = n as f64 - m / 2.0;
        let sinc = if x == 0.0 {
            2.0 * fc
        } else {
            (2.0 * PI * fc * x).sin() / (PI * x)
        };
        let w = 0.54 - 0.46 * (2.0 * PI * n as f64 / m).cos();
        taps[n] = sinc * w;
        taps[num_taps - 1 - n] = sinc * w;
    }
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Designs a windowed-sinc (Hamming) lowpass or highpass.
///
/// The highpass is the spectral inversion of the complementary lowpass and
/// therefore needs an odd length; an even `num_taps` is rounded up by one.
pub fn design_fir(
    kind: FilterKind,
    corner_hz: f64,
    num_taps: usize,
    rate: f64,
) -> Result<FirFilter> {
    check_corner("corner_hz", corner_hz, rate)?;
    if num_taps < 3 {
        return Err(Error::invalid(
            "num_taps",
            format!("need at least 3 taps, got {num_taps}"),
        ));
    }
    let taps = match kind {
        FilterKind::Lowpass => windowed_sinc(corner_hz, num_taps, rate),
        FilterKind::Highpass => {
            let n = num_taps | 1;
            let mut taps = windowed_sinc(corner_hz, n, rate);
            taps.iter_mut().for_each(|t| *t = -*t);
            taps[n / 2] += 1.0;
            taps
        }
        FilterKind::Bandpass => {
            return Err(Error::invalid(
                "kind",
                "use design_bandpass for bandpass filters",
            ))
        }
    };
    Ok(FirFilter {
        taps,
        design_rate: rate,
        kind,
        corner_hz,
        upper_hz: None,
    })
}

/// Bandpass as the difference of two unity-gain lowpass designs. Length is
/// forced odd.
pub fn design_bandpass(low_hz: f64, high_hz: f64, num_taps: usize, rate: f64) -> Result<FirFilter> {
    check_corner("low_hz", low_hz, rate)?;
    check_corner("high_hz", high_hz, rate)?;
    if low_hz >= high_hz {
        return Err(Error::invalid("low_hz", "must be below high_hz"));
    }
    if num_taps < 3 {
        return Err(Error::invalid("num_taps", "need at least 3 taps"));
    }
    let n = num_taps | 1;
    let hi = windowed_sinc(high_hz, n, rate);
    let lo = windowed_sinc(low_hz, n, rate);
    let taps = hi.iter().zip(&lo).map(|(h, l)| h - l).collect();
    Ok(FirFilter {
        taps,
        design_rate: rate,
        kind: FilterKind::Bandpass,
        corner_hz: low_hz,
        upper_hz: Some(high_hz),
    })
}

/// Direct-form convolution. Output has the input's length; the start time
/// is moved back by the group delay so output timestamps are aligned with
/// the signal content.
pub fn apply_fir(filter: &FirFilter, stream: &SampleStream) -> Result<SampleStream> {
    if (filter.design_rate - stream.sample_rate()).abs() > 1e-9 * filter.design_rate {
        return Err(Error::RateMismatch {
            filter_hz: filter.design_rate,
            stream_hz: stream.sample_rate(),
        });
    }
    let x = stream.samples();
    let h = &filter.taps;
    let y = (0..x.len())
        .map(|i| {
            let mut acc = 0.0;
            for (k, hk) in h.iter().enumerate().take(i + 1) {
                acc += hk * x[i - k];
            }
            acc
        })
        .collect();
    SampleStream::with_start(
        stream.sample_rate(),
        stream.start_time() - filter.group_delay_s(),
        y,
    )
}

/// Sample-at-a-time FIR producing the same values as [`apply_fir`].
#[derive(Debug, Clone)]
pub struct StreamingFir {
    taps: Vec<f64>,
    // Doubled ring so the newest `taps.len()` inputs are always contiguous.
    history: Vec<f64>,
    pos: usize,
    seen: usize,
}

impl StreamingFir {
    pub fn new(filter: &FirFilter) -> Self {
        let n = filter.taps.len();
        Self {
            taps: filter.taps.clone(),
            history: vec![0.0; 2 * n],
            pos: 0,
            seen: 0,
        }
    }

    pub fn push(&mut self, x: f64) -> f64 {
        let n = self.taps.len();
        self.pos = if self.pos == 0 { n - 1 } else { self.pos - 1 };
        self.history[self.pos] = x;
        self.history[self.pos + n] = x;
        self.seen += 1;
        // history[pos + k] holds x[i - k]
        let live = self.seen.min(n);
        let recent = &self.history[self.pos..self.pos + live];
        let mut acc = 0.0;
        for (hk, xk) in self.taps.iter().zip(recent) {
            acc += hk * xk;
        }
        acc
    }
}

/// Keeps every `factor`-th sample starting at index 0.
///
/// The caller is responsible for band-limiting below the new Nyquist rate.
pub fn decimate(stream: &SampleStream, factor: usize) -> Result<SampleStream> {
    if factor == 0 {
        return Err(Error::invalid("factor", "must be at least 1"));
    }
    let samples = stream.samples().iter().step_by(factor).copied().collect();
    SampleStream::with_start(
        stream.sample_rate() / factor as f64,
        stream.start_time(),
        samples,
    )
}

/// Streaming counterpart of [`decimate`].
#[derive(Debug, Clone)]
pub struct Decimator {
    factor: usize,
    phase: usize,
}

impl Decimator {
    pub fn new(factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::invalid("factor", "must be at least 1"));
        }
        Ok(Self { factor, phase: 0 })
    }

    pub fn push(&mut self, x: f64) -> Option<f64> {
        let keep = self.phase == 0;
        self.phase = (self.phase + 1) % self.factor;
        keep.then_some(x)
    }
}
