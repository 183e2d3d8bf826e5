//! Single-channel EEG drowsiness detection.
//!
//! The pipeline band-limits and decimates the raw signal, summarises it in
//! overlapping spectral frames, detects blink artifacts and alpha activity,
//! and drives a three-level alarm:
//!
//! 1. lengthening blinks,
//! 2. repeated short alpha bursts,
//! 3. sustained alpha (eyes closed).

// `!(x > 0.0)` checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alarm;
pub mod alpha;
pub mod blink;
pub mod cli;
pub mod config;
pub mod dsp;
pub mod error;
mod kv;
pub mod output;
pub mod pipeline;
pub mod score;
pub mod signal_io;

pub use error::{Error, Result};
