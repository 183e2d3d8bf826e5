use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the analysis library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("empty input")]
    EmptyInput,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: timestamp spacing {observed:.6} s inconsistent with declared rate ({expected:.6} s)")]
    TimestampSpacing {
        line: usize,
        observed: f64,
        expected: f64,
    },

    /// A value violates a documented precondition. `field` names the offending entry.
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },

    #[error("sample rate mismatch: filter designed for {filter_hz} Hz, stream is {stream_hz} Hz")]
    RateMismatch { filter_hz: f64, stream_hz: f64 },

    #[error("insufficient calibration data: {clean_frames} clean frames, need at least {required}")]
    InsufficientCalibration { clean_frames: usize, required: usize },

    #[error("frames are not sorted by window start (index {index})")]
    UnsortedFrames { index: usize },

    #[error("time regression: {time_s} s is earlier than previous evaluation at {previous_s} s")]
    TimeRegression { time_s: f64, previous_s: f64 },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
