//! Flat `key = value` text format shared by config and scenario files.
//!
//! One entry per line. `#` starts a comment line; blank lines are ignored.
//! Keys may carry dotted section prefixes (`alarm.level_hold_s`). Keys may
//! repeat where the consumer allows lists.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry<'a> {
    pub line: usize,
    pub key: &'a str,
    pub value: &'a str,
}

impl Entry<'_> {
    pub fn number(&self) -> Result<f64> {
        let v: f64 = self.value.parse().map_err(|_| self.error("expected a number"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.error("expected a finite number"))
        }
    }

    pub fn count(&self) -> Result<usize> {
        self.value
            .parse()
            .map_err(|_| self.error("expected a non-negative integer"))
    }

    pub fn unsigned(&self) -> Result<u64> {
        self.value
            .parse()
            .map_err(|_| self.error("expected a non-negative integer"))
    }

    /// Comma-separated numbers, exactly `n` of them.
    pub fn tuple(&self, n: usize) -> Result<Vec<f64>> {
        let parts: Vec<&str> = self.value.split(',').map(str::trim).collect();
        if parts.len() != n {
            return Err(self.error(&format!("expected {n} comma-separated numbers")));
        }
        parts
            .iter()
            .map(|p| {
                p.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| self.error(&format!("non-numeric field {p:?}")))
            })
            .collect()
    }

    pub fn error(&self, message: &str) -> Error {
        Error::Parse {
            line: self.line,
            message: format!("{}: {message}", self.key),
        }
    }
}

pub fn parse(text: &str) -> Result<Vec<Entry<'_>>> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: idx + 1,
            message: "expected `key = value`".into(),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Parse {
                line: idx + 1,
                message: "empty key".into(),
            });
        }
        entries.push(Entry {
            line: idx + 1,
            key,
            value: value.trim(),
        });
    }
    Ok(entries)
}
