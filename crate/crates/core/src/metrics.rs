//! Reconstruction of compressed series, error metrics, distortion
//! statistics and the threshold sweep.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sdt::{compress, report, CompressedSeries, Deviation};
use crate::series::{describe, TimeSeries};

/// Piecewise-linear interpolation of the retained samples at `at`.
///
/// Values at retained timestamps are returned verbatim. Timestamps outside
/// the retained span are rejected.
pub fn reconstruct(comp: &CompressedSeries, at: &[f64]) -> Result<TimeSeries> {
    let ts = comp.retained.timestamps();
    let vs = comp.retained.values();
    let (Some(&first), Some(&last)) = (ts.first(), ts.last()) else {
        return Err(Error::validation("compressed series is empty"));
    };
    if let Some(i) = at.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::validation(format!(
            "query timestamps not strictly increasing at index {}",
            i + 1
        )));
    }
    if let Some(&t) = at.iter().find(|&&t| !(t >= first && t <= last)) {
        return Err(Error::Range(format!("t={t} outside retained span [{first}, {last}]")));
    }

    let mut seg = 0;
    let values = at
        .iter()
        .map(|&t| {
            while seg + 1 < ts.len() && ts[seg + 1] < t {
                seg += 1;
            }
            if t == ts[seg] {
                vs[seg]
            } else if t == ts[seg + 1] {
                vs[seg + 1]
            } else {
                let w = (t - ts[seg]) / (ts[seg + 1] - ts[seg]);
                vs[seg] + w * (vs[seg + 1] - vs[seg])
            }
        })
        .collect();
    TimeSeries::new(at.to_vec(), values, comp.retained.unit())
}

/// Reconstruction on every original timestamp.
pub fn reconstruct_like(comp: &CompressedSeries, original: &TimeSeries) -> Result<TimeSeries> {
    reconstruct(comp, original.timestamps())
}

fn aligned_errors<'a>(a: &'a TimeSeries, b: &'a TimeSeries) -> Result<impl Iterator<Item = f64> + 'a> {
    if a.len() != b.len() {
        return Err(Error::validation(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::validation("cannot score empty series"));
    }
    if a.timestamps() != b.timestamps() {
        return Err(Error::validation("series timestamps differ"));
    }
    Ok(a.values().iter().zip(b.values()).map(|(x, y)| x - y))
}

pub fn mse(a: &TimeSeries, b: &TimeSeries) -> Result<f64> {
    let n = a.len() as f64;
    Ok(aligned_errors(a, b)?.map(|e| e * e).sum::<f64>() / n)
}

pub fn rmse(a: &TimeSeries, b: &TimeSeries) -> Result<f64> {
    mse(a, b).map(f64::sqrt)
}

pub fn mae(a: &TimeSeries, b: &TimeSeries) -> Result<f64> {
    let n = a.len() as f64;
    Ok(aligned_errors(a, b)?.map(f64::abs).sum::<f64>() / n)
}

/// Largest absolute pointwise difference.
pub fn max_abs_error(a: &TimeSeries, b: &TimeSeries) -> Result<f64> {
    Ok(aligned_errors(a, b)?.fold(0.0, |m, e| m.max(e.abs())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    /// `100 * |mean(recon) - mean(orig)| / |mean(orig)|`
    pub mean_deviation_pct: f64,
    /// `100 * (std(orig) - std(recon)) / std(orig)`; positive when the
    /// reconstruction is smoother than the original.
    pub std_underestimation_pct: f64,
}

pub fn distortion(original: &TimeSeries, reconstructed: &TimeSeries) -> Result<DistortionReport> {
    aligned_errors(original, reconstructed)?.for_each(drop);
    let o = describe(original)?;
    let r = describe(reconstructed)?;
    if o.mean == 0.0 {
        return Err(Error::degenerate(
            "original mean is zero; mean deviation percentage is undefined (shift the signal or compare absolute means)",
        ));
    }
    if o.std_dev == 0.0 {
        return Err(Error::degenerate(
            "original standard deviation is zero; std underestimation percentage is undefined",
        ));
    }
    Ok(DistortionReport {
        mean_deviation_pct: 100.0 * (r.mean - o.mean).abs() / o.mean.abs(),
        std_underestimation_pct: 100.0 * (o.std_dev - r.std_dev) / o.std_dev,
    })
}

/// One line of a threshold sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "threshold")]
    pub deviation: Deviation,
    pub compressed_points: usize,
    pub compression_ratio: f64,
    pub data_reduction_pct: f64,
    #[serde(rename = "rmse")]
    pub rmse_interpolated: f64,
}

fn sweep_row(ts: &TimeSeries, deviation: Deviation) -> Result<SweepRow> {
    let comp = compress(ts, deviation)?;
    let rep = report(ts, &comp)?;
    let recon = reconstruct_like(&comp, ts)?;
    Ok(SweepRow {
        deviation,
        compressed_points: rep.compressed_points,
        compression_ratio: rep.compression_ratio,
        data_reduction_pct: rep.data_reduction_pct,
        rmse_interpolated: rmse(ts, &recon)?,
    })
}

/// Compresses `ts` at every deviation and scores the interpolated
/// reconstruction against all original samples. Rows keep input order.
pub fn sweep(ts: &TimeSeries, deviations: &[Deviation]) -> Result<Vec<SweepRow>> {
    sweep_with(ts, deviations, false)
}

/// [`sweep`] with optional data-parallel row evaluation.
pub fn sweep_with(ts: &TimeSeries, deviations: &[Deviation], parallel: bool) -> Result<Vec<SweepRow>> {
    if deviations.is_empty() {
        return Err(Error::validation("sweep needs at least one deviation"));
    }
    if parallel {
        deviations.par_iter().map(|&d| sweep_row(ts, d)).collect()
    } else {
        deviations.iter().map(|&d| sweep_row(ts, d)).collect()
    }
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record([
        "threshold",
        "compressed_points",
        "compression_ratio",
        "data_reduction_pct",
        "rmse",
    ])?;
    for r in rows {
        w.write_record([
            r.deviation.to_string(),
            r.compressed_points.to_string(),
            r.compression_ratio.to_string(),
            r.data_reduction_pct.to_string(),
            r.rmse_interpolated.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_json<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, rows)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dev(v: f64) -> Deviation {
        Deviation::new(v).unwrap()
    }

    fn compressed(points: &[(f64, f64)], original_len: usize) -> CompressedSeries {
        let retained = TimeSeries::new(
            points.iter().map(|p| p.0).collect(),
            points.iter().map(|p| p.1).collect(),
            "",
        )
        .unwrap();
        CompressedSeries {
            retained,
            source_indices: (0..points.len()).collect(),
            deviation: Deviation::ZERO,
            original_len,
        }
    }

    fn series(values: &[f64]) -> TimeSeries {
        TimeSeries::from_values(values.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn midpoint() {
        let c = compressed(&[(0.0, 0.0), (10.0, 10.0)], 11);
        assert_eq!(reconstruct(&c, &[5.0]).unwrap().values(), &[5.0]);
    }

    #[test]
    fn identity_on_retained_timestamps() {
        let pts = [(0.0, 0.1), (0.3, 7.7), (1.1, -2.9), (4.0, 1.0 / 3.0)];
        let c = compressed(&pts, 5);
        let at: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let want: Vec<f64> = pts.iter().map(|p| p.1).collect();
        assert_eq!(reconstruct(&c, &at).unwrap().values(), want.as_slice());
    }

    #[test]
    fn two_segments() {
        let c = compressed(&[(0.0, 0.0), (4.0, 8.0), (10.0, 2.0)], 11);
        assert_eq!(reconstruct(&c, &[2.0, 7.0]).unwrap().values(), &[4.0, 5.0]);
    }

    #[test]
    fn no_extrapolation() {
        let c = compressed(&[(0.0, 0.0), (4.0, 8.0)], 5);
        assert!(matches!(reconstruct(&c, &[-0.5]), Err(Error::Range(_))));
        assert!(matches!(reconstruct(&c, &[4.5]), Err(Error::Range(_))));
        assert!(matches!(reconstruct(&c, &[2.0, 1.0]), Err(Error::Validation(_))));
    }

    #[test]
    fn error_metrics() {
        let a = series(&[0.0; 4]);
        let b = series(&[1.0; 4]);
        assert_eq!(
            (rmse(&a, &b).unwrap(), mae(&a, &b).unwrap(), mse(&a, &b).unwrap()),
            (1.0, 1.0, 1.0)
        );
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);

        let a = series(&[0.0, 0.0]);
        let b = series(&[3.0, 4.0]);
        assert!((rmse(&a, &b).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(mae(&a, &b).unwrap(), 3.5);
        assert_eq!(mse(&a, &b).unwrap(), 12.5);
    }

    #[test]
    fn metrics_reject_misaligned() {
        let a = series(&[0.0, 1.0]);
        assert!(rmse(&a, &series(&[0.0, 1.0, 2.0])).is_err());
        let shifted = TimeSeries::new(vec![0.5, 1.5], vec![0.0, 1.0], "").unwrap();
        assert!(mae(&a, &shifted).is_err());
    }

    #[test]
    fn distortion_cases() {
        let o = series(&[1.0, 3.0]);
        assert_eq!(
            distortion(&o, &o).unwrap(),
            DistortionReport {
                mean_deviation_pct: 0.0,
                std_underestimation_pct: 0.0
            }
        );
        let r = series(&[1.5, 2.5]);
        let d = distortion(&o, &r).unwrap();
        assert_eq!(d.mean_deviation_pct, 0.0);
        assert!((d.std_underestimation_pct - 50.0).abs() < 1e-12);
    }

    #[test]
    fn distortion_degenerate_denominators() {
        let zero_mean = series(&[-1.0, 1.0]);
        assert!(matches!(
            distortion(&zero_mean, &zero_mean),
            Err(Error::DegenerateSignal(_))
        ));
        let flat = series(&[2.0, 2.0]);
        assert!(matches!(distortion(&flat, &flat), Err(Error::DegenerateSignal(_))));
    }

    #[test]
    fn sweep_zero_deviation_is_lossless() {
        let values: Vec<f64> = (0..200).map(|i| ((i * i) % 17) as f64 * 0.3).collect();
        let rows = sweep(&series(&values), &[Deviation::ZERO]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].rmse_interpolated, 0.0);
        assert!(rows[0].data_reduction_pct >= 0.0);
    }

    #[test]
    fn sweep_keeps_order_and_parallel_agrees() {
        let values: Vec<f64> = (0..500)
            .map(|i| (i as f64 * 0.05).sin() * 4.0 + ((i * 7) % 5) as f64 * 0.05)
            .collect();
        let ts = series(&values);
        let devs = [dev(1.0), dev(0.05), dev(0.5), dev(0.0)];
        let seq = sweep(&ts, &devs).unwrap();
        let par = sweep_with(&ts, &devs, true).unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq.iter().map(|r| r.deviation).collect::<Vec<_>>(), devs);
        for r in &seq {
            assert!(r.rmse_interpolated <= r.deviation.value());
        }
        assert!(sweep(&ts, &[]).is_err());
    }

    #[test]
    fn sweep_csv_layout() {
        let rows = [SweepRow {
            deviation: dev(0.5),
            compressed_points: 2,
            compression_ratio: 0.5,
            data_reduction_pct: 50.0,
            rmse_interpolated: 0.25,
        }];
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "threshold,compressed_points,compression_ratio,data_reduction_pct,rmse\n0.5,2,0.5,50,0.25\n"
        );
        let mut buf = Vec::new();
        write_sweep_json(&rows, &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v[0]["threshold"], 0.5);
        assert_eq!(v[0]["rmse"], 0.25);
    }
}
