use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::SampleStream;
use crate::error::{Error, Result};

/// Relative tolerance on timestamp spacing.
const SPACING_TOLERANCE: f64 = 0.01;

/// Reads `amplitude_uv` or `time_s,amplitude_uv` rows. Lines beginning with
/// `#` and blank lines are skipped.
pub fn read_csv(path: impl AsRef<Path>, declared_rate: f64) -> Result<SampleStream> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(&text, declared_rate)
}

pub(crate) fn parse_csv(text: &str, declared_rate: f64) -> Result<SampleStream> {
    if !(declared_rate.is_finite() && declared_rate > 0.0) {
        return Err(Error::invalid("rate", "declared rate must be positive"));
    }
    let period = 1.0 / declared_rate;
    let mut samples = Vec::new();
    let mut first_time: Option<f64> = None;
    let mut prev_time: Option<f64> = None;
    let mut timed: Option<bool> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse = |s: &str| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("non-numeric field {s:?}"),
            })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Parse {
                    line: line_no,
                    message: format!("non-finite value {s:?}"),
                })
            }
        };
        let has_time = match fields.len() {
            1 => false,
            2 => true,
            n => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected 1 or 2 fields, found {n}"),
                })
            }
        };
        if *timed.get_or_insert(has_time) != has_time {
            return Err(Error::Parse {
                line: line_no,
                message: "mixed timestamped and amplitude-only rows".into(),
            });
        }
        if has_time {
            let t = parse(fields[0])?;
            if let Some(p) = prev_time {
                let dt = t - p;
                if ((dt - period) / period).abs() > SPACING_TOLERANCE {
                    return Err(Error::TimestampSpacing {
                        line: line_no,
                        observed: dt,
                        expected: period,
                    });
                }
            }
            first_time.get_or_insert(t);
            prev_time = Some(t);
            samples.push(parse(fields[1])?);
        } else {
            samples.push(parse(fields[0])?);
        }
    }

    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    SampleStream::with_start(declared_rate, first_time.unwrap_or(0.0), samples)
}

/// Writes a stream as CSV with three-decimal amplitudes. With `with_time`
/// each row is prefixed by its timestamp.
pub fn write_csv(path: impl AsRef<Path>, stream: &SampleStream, with_time: bool) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    let header = if with_time {
        "# time_s,amplitude_uv"
    } else {
        "# amplitude_uv"
    };
    writeln!(out, "{header}").map_err(io_err)?;
    for (i, v) in stream.samples().iter().enumerate() {
        if with_time {
            writeln!(out, "{:.6},{:.3}", stream.time_of(i), v).map_err(io_err)?;
        } else {
            writeln!(out, "{v:.3}").map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)
}
