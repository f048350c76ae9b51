//! Swinging-door trending (SDT) compression and threshold selection.
//!
//! The compressor keeps an anchor (the last archived sample) and a window
//! of admissible slopes `[lower, upper]` out of the anchor. Every sample
//! `(t, v)` seen since the anchor narrows the window to slopes whose line
//! passes within `deviation` of it:
//!
//! ```text
//! lower = max(lower, (v - deviation - anchor.v) / (t - anchor.t))
//! upper = min(upper, (v + deviation - anchor.v) / (t - anchor.t))
//! ```
//!
//! A new sample whose own slope from the anchor falls outside the window
//! cannot terminate a segment that stays within `deviation` of every
//! skipped sample, so the doors close: the previous sample is archived and
//! becomes the anchor, and the window reopens against the new sample.
//! Because the archived sample's slope was inside the window, linear
//! interpolation between consecutive archived samples never misses an
//! original sample by more than `deviation`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{SignalStats, TimeSeries};

/// SDT tolerance half-width in engineering units.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Deviation(f64);

impl Deviation {
    pub const ZERO: Deviation = Deviation(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value >= 0.0 {
            Ok(Deviation(value))
        } else {
            Err(Error::validation(format!(
                "deviation must be finite and >= 0, got {value}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Deviation {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Deviation::new(v)
    }
}

impl From<Deviation> for f64 {
    fn from(d: Deviation) -> f64 {
        d.0
    }
}

impl fmt::Display for Deviation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdPolicy {
    /// 10% of the signal's standard deviation.
    Conservative,
    /// 2% of the signal's range.
    Moderate,
    /// 25% of the signal's standard deviation.
    Aggressive,
    Fixed(Deviation),
}

impl ThresholdPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            ThresholdPolicy::Conservative => "conservative",
            ThresholdPolicy::Moderate => "moderate",
            ThresholdPolicy::Aggressive => "aggressive",
            ThresholdPolicy::Fixed(_) => "fixed",
        }
    }
}

impl fmt::Display for ThresholdPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdPolicy::Fixed(d) => write!(f, "fixed:{d}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for ThresholdPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "conservative" => Ok(ThresholdPolicy::Conservative),
            "moderate" => Ok(ThresholdPolicy::Moderate),
            "aggressive" => Ok(ThresholdPolicy::Aggressive),
            other => match other.strip_prefix("fixed:") {
                Some(v) => {
                    let v = v
                        .parse::<f64>()
                        .map_err(|_| Error::validation(format!("bad fixed threshold `{v}`")))?;
                    Ok(ThresholdPolicy::Fixed(Deviation::new(v)?))
                }
                None => Err(Error::validation(format!("unknown threshold policy `{s}`"))),
            },
        }
    }
}

/// Normalized fluctuation index: `std_dev / range`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct FluctuationIndex(f64);

impl FluctuationIndex {
    pub fn ratio(self) -> f64 {
        self.0
    }
}

pub fn fluctuation_index(stats: &SignalStats) -> Result<FluctuationIndex> {
    if stats.range.is_nan() || stats.range <= 0.0 {
        return Err(Error::degenerate(
            "signal range is zero (flat signal); use a fixed threshold or skip tuning",
        ));
    }
    Ok(FluctuationIndex(stats.std_dev / stats.range))
}

pub fn threshold_for(policy: ThresholdPolicy, stats: &SignalStats) -> Result<Deviation> {
    let need_std = || {
        if stats.std_dev > 0.0 {
            Ok(stats.std_dev)
        } else {
            Err(Error::degenerate(format!(
                "{} threshold needs a non-zero standard deviation",
                policy.name()
            )))
        }
    };
    match policy {
        ThresholdPolicy::Conservative => Deviation::new(0.10 * need_std()?),
        ThresholdPolicy::Aggressive => Deviation::new(0.25 * need_std()?),
        ThresholdPolicy::Moderate => {
            if stats.range > 0.0 {
                Deviation::new(0.02 * stats.range)
            } else {
                Err(Error::degenerate("moderate threshold needs a non-zero signal range"))
            }
        }
        ThresholdPolicy::Fixed(d) => Ok(d),
    }
}

/// Fluctuation-index breakpoints for [`suggest_policy_with`]. Ratios below
/// `low` are treated as calm, above `high` as volatile; both ends of
/// `[low, high]` belong to the moderate band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyBounds {
    pub low: f64,
    pub high: f64,
}

impl Default for PolicyBounds {
    fn default() -> Self {
        Self { low: 0.1, high: 0.3 }
    }
}

/// Picks a policy from the fluctuation index: calm signals tolerate
/// aggressive compression, volatile ones get conservative thresholds.
pub fn suggest_policy(stats: &SignalStats) -> Result<(ThresholdPolicy, Deviation)> {
    suggest_policy_with(stats, PolicyBounds::default())
}

pub fn suggest_policy_with(stats: &SignalStats, bounds: PolicyBounds) -> Result<(ThresholdPolicy, Deviation)> {
    if bounds.low.is_nan() || bounds.high.is_nan() || bounds.low > bounds.high {
        return Err(Error::validation(format!(
            "policy bounds {} > {}",
            bounds.low, bounds.high
        )));
    }
    let ratio = fluctuation_index(stats)?.ratio();
    let policy = if ratio < bounds.low {
        ThresholdPolicy::Aggressive
    } else if ratio <= bounds.high {
        ThresholdPolicy::Moderate
    } else {
        ThresholdPolicy::Conservative
    };
    Ok((policy, threshold_for(policy, stats)?))
}

/// A sample emitted by the compressor, with its position in the input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Archived {
    pub index: usize,
    pub timestamp: f64,
    pub value: f64,
}

/// Incremental swinging-door compressor. Feed samples in time order with
/// [`push`](Self::push); call [`finish`](Self::finish) after the last one.
/// State is constant-size.
#[derive(Debug, Clone)]
pub struct SwingingDoor {
    deviation: f64,
    anchor: Option<Archived>,
    prev: Option<Archived>,
    lower: f64,
    upper: f64,
    seen: usize,
}

impl SwingingDoor {
    pub fn new(deviation: Deviation) -> Self {
        Self {
            deviation: deviation.value(),
            anchor: None,
            prev: None,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            seen: 0,
        }
    }

    /// Number of samples pushed so far.
    pub fn seen(&self) -> usize {
        self.seen
    }

    /// Pushes one sample and returns the sample archived as a result, if any.
    pub fn push(&mut self, timestamp: f64, value: f64) -> Result<Option<Archived>> {
        if !timestamp.is_finite() || !value.is_finite() {
            return Err(Error::validation(format!("non-finite sample at index {}", self.seen)));
        }
        let current = Archived {
            index: self.seen,
            timestamp,
            value,
        };
        let last = self.prev.or(self.anchor);
        if let Some(last) = last {
            if timestamp <= last.timestamp {
                return Err(Error::validation(format!(
                    "timestamps not strictly increasing at index {} ({} -> {timestamp})",
                    self.seen, last.timestamp
                )));
            }
        }
        self.seen += 1;

        let Some(anchor) = self.anchor else {
            self.anchor = Some(current);
            return Ok(Some(current));
        };

        let dt = timestamp - anchor.timestamp;
        let slope = (value - anchor.value) / dt;
        let mut emitted = None;
        if slope < self.lower || slope > self.upper {
            // `prev` is always set here: the window is unbounded right
            // after the anchor moves, so the first sample never closes it.
            let pivot = self.prev.expect("door closed without an intermediate sample");
            self.anchor = Some(pivot);
            self.lower = f64::NEG_INFINITY;
            self.upper = f64::INFINITY;
            emitted = Some(pivot);
        }

        let anchor = self.anchor.expect("anchor set above");
        let dt = timestamp - anchor.timestamp;
        self.lower = self.lower.max((value - self.deviation - anchor.value) / dt);
        self.upper = self.upper.min((value + self.deviation - anchor.value) / dt);
        self.prev = Some(current);
        Ok(emitted)
    }

    /// Flushes the final sample. Returns `None` when nothing is pending.
    pub fn finish(self) -> Option<Archived> {
        match (self.anchor, self.prev) {
            (Some(a), Some(p)) if p.index != a.index => Some(p),
            _ => None,
        }
    }
}

/// Retained subset of an original series plus the deviation that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedSeries {
    pub retained: TimeSeries,
    pub source_indices: Vec<usize>,
    pub deviation: Deviation,
    pub original_len: usize,
}

impl CompressedSeries {
    pub fn len(&self) -> usize {
        self.source_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source_indices.is_empty()
    }

    /// Writes `source_index,timestamp,value` CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["source_index", "timestamp", "value"])?;
        for (idx, (t, v)) in self.source_indices.iter().zip(self.retained.iter()) {
            w.write_record([idx.to_string(), t.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn metadata(&self, policy: Option<ThresholdPolicy>) -> CompressionMetadata {
        CompressionMetadata {
            deviation: self.deviation.value(),
            original_len: self.original_len,
            policy: policy.map(|p| p.name().to_string()),
        }
    }
}

/// Sidecar JSON document for a compressed series export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionMetadata {
    pub deviation: f64,
    pub original_len: usize,
    pub policy: Option<String>,
}

pub fn compress(ts: &TimeSeries, deviation: Deviation) -> Result<CompressedSeries> {
    if ts.len() < 2 {
        return Err(Error::validation(format!(
            "compression needs >= 2 samples, got {}",
            ts.len()
        )));
    }
    let mut door = SwingingDoor::new(deviation);
    let mut kept = Vec::new();
    for (t, v) in ts.iter() {
        if let Some(a) = door.push(t, v)? {
            kept.push(a);
        }
    }
    kept.extend(door.finish());

    let source_indices = kept.iter().map(|a| a.index).collect();
    let retained = TimeSeries::new(
        kept.iter().map(|a| a.timestamp).collect(),
        kept.iter().map(|a| a.value).collect(),
        ts.unit(),
    )?;
    Ok(CompressedSeries {
        retained,
        source_indices,
        deviation,
        original_len: ts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    pub original_points: usize,
    pub compressed_points: usize,
    /// `compressed_points / original_points`.
    pub compression_ratio: f64,
    pub data_reduction_pct: f64,
    pub deviation: Deviation,
}

impl CompressionReport {
    pub fn from_counts(original_points: usize, compressed_points: usize, deviation: Deviation) -> Result<Self> {
        if original_points == 0 || compressed_points > original_points {
            return Err(Error::validation(format!(
                "cannot retain {compressed_points} of {original_points} points"
            )));
        }
        let compression_ratio = compressed_points as f64 / original_points as f64;
        Ok(Self {
            original_points,
            compressed_points,
            compression_ratio,
            data_reduction_pct: 100.0 * (1.0 - compression_ratio),
            deviation,
        })
    }
}

pub fn report(original: &TimeSeries, comp: &CompressedSeries) -> Result<CompressionReport> {
    if comp.original_len != original.len() {
        return Err(Error::validation(format!(
            "compressed series came from {} samples, original has {}",
            comp.original_len,
            original.len()
        )));
    }
    CompressionReport::from_counts(original.len(), comp.len(), comp.deviation)
}
