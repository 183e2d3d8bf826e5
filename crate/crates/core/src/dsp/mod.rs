//! Linear-phase FIR design and application, decimation, Welch spectra and
//! band-power framing.

mod fir;
mod frames;
mod welch;

pub use fir::{
    apply_fir, decimate, design_bandpass, design_fir, Decimator, FilterKind, FirFilter,
    StreamingFir,
};
pub use frames::{
    compute_band_power_frames, BandPowerFrame, FrameBuilder, FrameConfig, ALPHA_BAND, THETA_BAND,
    TOTAL_BAND,
};
pub use welch::{band_power, welch_psd, Spectrum, WelchEstimator, WindowFn};
