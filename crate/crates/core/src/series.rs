//! The `TimeSeries` container and its summary statistics.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered `(timestamp, value)` samples.
///
/// Timestamps are seconds and strictly increasing; values are finite.
/// Both invariants are checked on construction, so every `TimeSeries` in
/// circulation is valid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    timestamps: Vec<f64>,
    values: Vec<f64>,
    unit: String,
}

impl TimeSeries {
    pub fn new(timestamps: Vec<f64>, values: Vec<f64>, unit: impl Into<String>) -> Result<Self> {
        if timestamps.len() != values.len() {
            return Err(Error::validation(format!(
                "{} timestamps but {} values",
                timestamps.len(),
                values.len()
            )));
        }
        if let Some(i) = timestamps.iter().position(|t| !t.is_finite()) {
            return Err(Error::validation(format!("non-finite timestamp at index {i}")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!("non-finite value at index {i}")));
        }
        if let Some(i) = timestamps.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::validation(format!(
                "timestamps not strictly increasing at index {} ({} -> {})",
                i + 1,
                timestamps[i],
                timestamps[i + 1]
            )));
        }
        Ok(Self {
            timestamps,
            values,
            unit: unit.into(),
        })
    }

    /// Builds a series sampled every `dt` seconds starting at zero.
    pub fn from_values(values: Vec<f64>, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::validation(format!("dt must be positive, got {dt}")));
        }
        let timestamps = (0..values.len()).map(|i| i as f64 * dt).collect();
        Self::new(timestamps, values, "")
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = unit.into();
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.timestamps.iter().copied().zip(self.values.iter().copied())
    }

    /// Same timestamps, new values. Values are re-validated.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.timestamps.clone(), values, self.unit.clone())
    }

    /// Contiguous sub-range `[start, end)` by index.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end > self.len() {
            return Err(Error::validation(format!(
                "slice {start}..{end} out of bounds for length {}",
                self.len()
            )));
        }
        Ok(Self {
            timestamps: self.timestamps[start..end].to_vec(),
            values: self.values[start..end].to_vec(),
            unit: self.unit.clone(),
        })
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.timestamps, self.values)
    }

    /// Writes `timestamp,value` CSV with `\n` line endings.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["timestamp", "value"])?;
        for (t, v) in self.iter() {
            w.write_record([t.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = r.headers()?.clone();
        if headers.len() < 2 || &headers[0] != "timestamp" || &headers[1] != "value" {
            return Err(Error::validation(format!(
                "expected header `timestamp,value`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut timestamps = Vec::new();
        let mut values = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse = |field: usize| -> Result<f64> {
                rec.get(field)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::validation(format!("bad number on data row {}", line + 1)))
            };
            timestamps.push(parse(0)?);
            values.push(parse(1)?);
        }
        Self::new(timestamps, values, "")
    }
}

/// Population summary statistics of a series' values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalStats {
    pub mean: f64,
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
    pub range: f64,
    pub n: usize,
}

impl SignalStats {
    /// Stats carrying only the two fields the threshold heuristics read.
    /// `mean`, `min` and `max` are filled so that the invariants hold.
    pub fn from_std_range(std_dev: f64, range: f64) -> Self {
        Self {
            mean: range / 2.0,
            std_dev,
            min: 0.0,
            max: range,
            range,
            n: 1,
        }
    }
}

pub fn describe(ts: &TimeSeries) -> Result<SignalStats> {
    describe_values(ts.values())
}

pub fn describe_values(values: &[f64]) -> Result<SignalStats> {
    if values.is_empty() {
        return Err(Error::validation("cannot describe an empty series"));
    }
    let n = values.len();
    let mean = mean(values);
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let (min, max) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    Ok(SignalStats {
        // Clamp the mean into [min, max]; summation rounding can push it a
        // hair outside on constant inputs.
        mean: mean.clamp(min, max),
        std_dev: var.sqrt(),
        min,
        max,
        range: max - min,
        n,
    })
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}
