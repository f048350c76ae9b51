//! Trailing-window z-score detection and recall scoring against injected
//! anomaly labels.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::reconstruct_like;
use crate::sdt::{compress, report, Deviation};
use crate::series::TimeSeries;
use crate::signal::AnomalyLabels;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionParams {
    /// Number of samples strictly before `i` used for the rolling statistics.
    pub window: usize,
    pub z_threshold: f64,
    /// Slack in samples when matching detections to labelled windows.
    pub match_tolerance: usize,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            window: 50,
            z_threshold: 3.0,
            match_tolerance: 2,
        }
    }
}

impl DetectionParams {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 {
            return Err(Error::validation(format!(
                "detection window must be >= 3, got {}",
                self.window
            )));
        }
        if !(self.z_threshold > 0.0 && self.z_threshold.is_finite()) {
            return Err(Error::validation(format!(
                "z_threshold must be positive, got {}",
                self.z_threshold
            )));
        }
        Ok(())
    }
}

/// Indices whose value leaves the `z_threshold` band around the mean of the
/// preceding `window` samples. The first `window` samples are never flagged.
/// A window with zero spread flags any sample that differs from it.
pub fn detect(ts: &TimeSeries, params: &DetectionParams) -> Result<Vec<usize>> {
    params.validate()?;
    let values = ts.values();
    if values.len() <= params.window {
        return Err(Error::validation(format!(
            "series of {} samples is too short for a {}-sample window",
            values.len(),
            params.window
        )));
    }
    let w = params.window as f64;
    let flagged = (params.window..values.len())
        .filter(|&i| {
            let past = &values[i - params.window..i];
            let (lo, hi) = past
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
            let (mean, std) = if lo == hi {
                (lo, 0.0)
            } else {
                let mean = past.iter().sum::<f64>() / w;
                let var = past.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / w;
                (mean, var.sqrt())
            };
            (values[i] - mean).abs() > params.z_threshold * std
        })
        .collect();
    Ok(flagged)
}

fn distance_to_window(idx: usize, (first, last): (usize, usize)) -> usize {
    if idx < first {
        first - idx
    } else {
        idx.saturating_sub(last)
    }
}

/// Scores detections against labels.
///
/// Each detection is assigned to the nearest label window within
/// `tolerance` samples (ties go to the earlier label). A label counts as
/// hit when at least one detection is assigned to it; a detection counts
/// as true when it is assigned at all. Empty label or detection sets score
/// 1.0 on the corresponding side.
pub fn recall_precision(labels: &AnomalyLabels, detections: &[usize], tolerance: usize) -> (f64, f64) {
    let windows: Vec<(usize, usize)> = labels.windows().collect();
    let mut hit = vec![false; windows.len()];
    let mut true_detections = 0usize;
    for &d in detections {
        let nearest = windows
            .iter()
            .enumerate()
            .map(|(k, &w)| (distance_to_window(d, w), k))
            .filter(|&(dist, _)| dist <= tolerance)
            .min();
        if let Some((_, k)) = nearest {
            hit[k] = true;
            true_detections += 1;
        }
    }
    let recall = if windows.is_empty() {
        1.0
    } else {
        hit.iter().filter(|&&h| h).count() as f64 / windows.len() as f64
    };
    let precision = if detections.is_empty() {
        1.0
    } else {
        true_detections as f64 / detections.len() as f64
    };
    (recall, precision)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecallPoint {
    #[serde(rename = "threshold")]
    pub deviation: Deviation,
    pub data_reduction_pct: f64,
    pub recall: f64,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RecallCurve {
    pub points: Vec<RecallPoint>,
}

impl RecallCurve {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["threshold", "data_reduction_pct", "recall", "precision"])?;
        for p in &self.points {
            w.write_record([
                p.deviation.to_string(),
                p.data_reduction_pct.to_string(),
                p.recall.to_string(),
                p.precision.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Recall and precision of the detector on the uncompressed series.
pub fn score_raw(ts: &TimeSeries, labels: &AnomalyLabels, params: &DetectionParams) -> Result<(f64, f64)> {
    let detections = detect(ts, params)?;
    Ok(recall_precision(labels, &detections, params.match_tolerance))
}

fn curve_point(
    ts: &TimeSeries,
    labels: &AnomalyLabels,
    deviation: Deviation,
    params: &DetectionParams,
) -> Result<RecallPoint> {
    let comp = compress(ts, deviation)?;
    let reduction = report(ts, &comp)?.data_reduction_pct;
    let recon = reconstruct_like(&comp, ts)?;
    let (recall, precision) = score_raw(&recon, labels, params)?;
    Ok(RecallPoint {
        deviation,
        data_reduction_pct: reduction,
        recall,
        precision,
    })
}

/// Compresses at each deviation, runs the detector on the interpolated
/// reconstruction and scores it against `labels`.
pub fn recall_vs_compression(
    ts_with_anomalies: &TimeSeries,
    labels: &AnomalyLabels,
    deviations: &[Deviation],
    params: &DetectionParams,
) -> Result<RecallCurve> {
    recall_vs_compression_with(ts_with_anomalies, labels, deviations, params, false)
}

pub fn recall_vs_compression_with(
    ts_with_anomalies: &TimeSeries,
    labels: &AnomalyLabels,
    deviations: &[Deviation],
    params: &DetectionParams,
    parallel: bool,
) -> Result<RecallCurve> {
    params.validate()?;
    let points = if parallel {
        deviations
            .par_iter()
            .map(|&d| curve_point(ts_with_anomalies, labels, d, params))
            .collect::<Result<Vec<_>>>()?
    } else {
        deviations
            .iter()
            .map(|&d| curve_point(ts_with_anomalies, labels, d, params))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(RecallCurve { points })
}
