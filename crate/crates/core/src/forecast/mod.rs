//! One-step-ahead univariate forecasting on raw and compressed data.
//!
//! AR and lagged linear regression share one least-squares estimator.
//! MA and ARMA are fitted by conditional sum of squares: pre-sample
//! innovations are zero, the series is centred on its training mean, and
//! the squared innovations are minimised with Nelder–Mead.

mod ols;
pub mod simplex;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::reconstruct_like;
use crate::sdt::{compress, Deviation};
use crate::series::{mean, TimeSeries};
use ols::{fit_lags, LagFitError};
use simplex::{minimize, SimplexOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Ar(usize),
    Ma(usize),
    Arma(usize, usize),
    /// Linear regression on the previous `p` values.
    LagLinear(usize),
}

impl ModelKind {
    /// AR(2), MA(2), ARMA(2,2), LagLinear(10).
    pub fn defaults() -> Vec<ModelKind> {
        vec![
            ModelKind::Ar(2),
            ModelKind::Ma(2),
            ModelKind::Arma(2, 2),
            ModelKind::LagLinear(10),
        ]
    }

    pub fn ar_order(self) -> usize {
        match self {
            ModelKind::Ar(p) | ModelKind::LagLinear(p) | ModelKind::Arma(p, _) => p,
            ModelKind::Ma(_) => 0,
        }
    }

    pub fn ma_order(self) -> usize {
        match self {
            ModelKind::Ma(q) | ModelKind::Arma(_, q) => q,
            ModelKind::Ar(_) | ModelKind::LagLinear(_) => 0,
        }
    }

    /// Longest look-back any forecast needs.
    pub fn max_order(self) -> usize {
        self.ar_order().max(self.ma_order())
    }

    fn parameter_count(self) -> usize {
        self.ar_order() + self.ma_order() + 1
    }

    pub fn validate(self) -> Result<()> {
        let ok = match self {
            ModelKind::Ar(p) | ModelKind::LagLinear(p) => p >= 1,
            ModelKind::Ma(q) => q >= 1,
            ModelKind::Arma(p, q) => p >= 1 && q >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::validation(format!("{self}: model orders must be >= 1")))
        }
    }

    fn uses_least_squares(self) -> bool {
        matches!(self, ModelKind::Ar(_) | ModelKind::LagLinear(_))
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Ar(p) => write!(f, "AR({p})"),
            ModelKind::Ma(q) => write!(f, "MA({q})"),
            ModelKind::Arma(p, q) => write!(f, "ARMA({p},{q})"),
            ModelKind::LagLinear(p) => write!(f, "LagLinear({p})"),
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    /// Accepts `AR(2)`, `MA(1)`, `ARMA(2,1)`, `LagLinear(10)` (alias `LR(10)`),
    /// case-insensitive.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::validation(format!("cannot parse model `{s}`; expected e.g. AR(2), ARMA(2,2)"));
        let compact: String = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_ascii_lowercase();
        let (name, rest) = compact.split_once('(').ok_or_else(bad)?;
        let args = rest.strip_suffix(')').ok_or_else(bad)?;
        let orders: Vec<usize> = args
            .split(',')
            .map(|a| a.parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let kind = match (name, orders.as_slice()) {
            ("ar", &[p]) => ModelKind::Ar(p),
            ("ma", &[q]) => ModelKind::Ma(q),
            ("arma", &[p, q]) => ModelKind::Arma(p, q),
            ("laglinear" | "lr", &[p]) => ModelKind::LagLinear(p),
            _ => return Err(bad()),
        };
        kind.validate()?;
        Ok(kind)
    }
}

impl Serialize for ModelKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ModelKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub kind: ModelKind,
    /// AR coefficients (lag 1 first) followed by MA coefficients.
    pub coefficients: Vec<f64>,
    /// Regression intercept for AR/LagLinear; training mean for MA/ARMA.
    pub intercept: f64,
    pub residual_variance: f64,
    pub converged: bool,
}

impl FitResult {
    /// A model that always predicts `level`.
    pub fn mean_only(kind: ModelKind, level: f64) -> Self {
        Self {
            kind,
            coefficients: vec![0.0; kind.ar_order() + kind.ma_order()],
            intercept: level,
            residual_variance: 0.0,
            converged: true,
        }
    }

    pub fn ar_coefficients(&self) -> &[f64] {
        &self.coefficients[..self.kind.ar_order()]
    }

    pub fn ma_coefficients(&self) -> &[f64] {
        &self.coefficients[self.kind.ar_order()..]
    }
}

/// Chronological split. The training part gets `round(n * train_fraction)`
/// samples; both parts must hold at least `max_order + 2` samples.
pub fn train_test_split(ts: &TimeSeries, train_fraction: f64, max_order: usize) -> Result<(TimeSeries, TimeSeries)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::validation(format!(
            "train_fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let n_train = (ts.len() as f64 * train_fraction).round() as usize;
    let min = max_order + 2;
    if n_train < min || ts.len() - n_train < min {
        return Err(Error::validation(format!(
            "splitting {} samples at {train_fraction} gives {} train / {} test; each needs >= {min}",
            ts.len(),
            n_train,
            ts.len() - n_train
        )));
    }
    Ok((ts.slice(0, n_train)?, ts.slice(n_train, ts.len())?))
}

fn fit_error(kind: ModelKind, reason: impl Into<String>) -> Error {
    Error::Fit {
        model: kind.to_string(),
        reason: reason.into(),
    }
}

/// Innovations of an ARMA recursion on the centred series `z`. Innovations
/// before index `ar` are zero.
fn innovations(z: &[f64], ar: &[f64], ma: &[f64]) -> Vec<f64> {
    let p = ar.len();
    let mut eps = vec![0.0; z.len()];
    for t in p..z.len() {
        let mut pred = 0.0;
        for (i, phi) in ar.iter().enumerate() {
            pred += phi * z[t - 1 - i];
        }
        for (j, theta) in ma.iter().enumerate() {
            if t > j {
                pred += theta * eps[t - 1 - j];
            }
        }
        eps[t] = z[t] - pred;
    }
    eps
}

pub fn fit(train: &TimeSeries, kind: ModelKind) -> Result<FitResult> {
    kind.validate()?;
    if kind.parameter_count() >= train.len() || train.len() < kind.max_order() + 2 {
        return Err(Error::validation(format!(
            "{kind} needs more than {} training samples, got {}",
            kind.parameter_count().max(kind.max_order() + 1),
            train.len()
        )));
    }
    let values = train.values();

    if kind.uses_least_squares() {
        let lag = fit_lags(values, kind.ar_order()).map_err(|e| match e {
            LagFitError::TooShort { needed, got } => {
                Error::validation(format!("{kind} needs {needed} samples, got {got}"))
            }
            LagFitError::ConstantRegressor { lag } => fit_error(
                kind,
                format!("singular design matrix: lag {lag} regressor has zero variance"),
            ),
            LagFitError::Solver => fit_error(kind, "least-squares solve failed"),
        })?;
        let mut coefficients = lag.coefficients;
        coefficients.truncate(kind.ar_order());
        return Ok(FitResult {
            kind,
            coefficients,
            intercept: lag.intercept,
            residual_variance: lag.residual_variance,
            converged: true,
        });
    }

    let p = kind.ar_order();
    let q = kind.ma_order();
    let level = mean(values);
    let z: Vec<f64> = values.iter().map(|v| v - level).collect();

    // Start the AR part from its least-squares estimate when one exists.
    let mut start = vec![0.0; p + q];
    if p > 0 {
        if let Ok(lag) = fit_lags(&z, p) {
            start[..p].copy_from_slice(&lag.coefficients);
        }
    }
    let sse = |x: &[f64]| innovations(&z, &x[..p], &x[p..]).iter().map(|e| e * e).sum::<f64>();
    let best = minimize(sse, &start, SimplexOptions::default());
    if !best.value.is_finite() {
        return Err(fit_error(kind, "conditional sum of squares diverged"));
    }
    Ok(FitResult {
        kind,
        coefficients: best.point,
        intercept: level,
        residual_variance: best.value / (z.len() - p) as f64,
        converged: best.converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalReport {
    pub kind: ModelKind,
    pub mae: f64,
    pub mse: f64,
    pub n_test: usize,
}

/// One-step-ahead predictions for `values[start..]`, each using only true
/// values before it.
fn one_step_predictions(fit: &FitResult, values: &[f64], start: usize) -> Vec<f64> {
    let ar = fit.ar_coefficients();
    let ma = fit.ma_coefficients();
    if fit.kind.uses_least_squares() {
        return (start..values.len())
            .map(|t| {
                fit.intercept
                    + ar.iter()
                        .enumerate()
                        .map(|(i, phi)| phi * values[t - 1 - i])
                        .sum::<f64>()
            })
            .collect();
    }
    let z: Vec<f64> = values.iter().map(|v| v - fit.intercept).collect();
    let eps = innovations(&z, ar, ma);
    (start..values.len()).map(|t| values[t] - eps[t]).collect()
}

/// Rolling one-step-ahead evaluation over `test`, seeded with `history`
/// (the samples immediately preceding `test`). No refitting.
pub fn evaluate(fit: &FitResult, test: &TimeSeries, history: &TimeSeries) -> Result<EvalReport> {
    let need = fit.kind.max_order();
    if history.len() < need {
        return Err(Error::validation(format!(
            "{} needs {need} history samples, got {}",
            fit.kind,
            history.len()
        )));
    }
    if test.is_empty() {
        return Err(Error::validation("empty test set"));
    }
    if let (Some(&h), Some(&t)) = (history.timestamps().last(), test.timestamps().first()) {
        if h >= t {
            return Err(Error::validation("history must end before the test set starts"));
        }
    }
    let mut values = history.values().to_vec();
    values.extend_from_slice(test.values());
    let preds = one_step_predictions(fit, &values, history.len());
    let n = test.len() as f64;
    let (abs, sq) = preds
        .iter()
        .zip(test.values())
        .fold((0.0, 0.0), |(a, s), (p, y)| (a + (y - p).abs(), s + (y - p).powi(2)));
    Ok(EvalReport {
        kind: fit.kind,
        mae: abs / n,
        mse: sq / n,
        n_test: test.len(),
    })
}

/// `100 * (raw - compressed) / compressed`; positive when compression
/// helped. Equal inputs give exactly 0; a zero compressed error with a
/// non-zero raw error gives `+inf`.
pub fn improvement_pct(raw: f64, compressed: f64) -> f64 {
    if raw == compressed {
        0.0
    } else if compressed == 0.0 {
        f64::INFINITY
    } else {
        100.0 * (raw - compressed) / compressed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImprovementReport {
    pub kind: ModelKind,
    pub mae_improvement_pct: f64,
    pub mse_improvement_pct: f64,
}

impl ImprovementReport {
    pub fn between(raw: &EvalReport, compressed: &EvalReport) -> Self {
        Self {
            kind: raw.kind,
            mae_improvement_pct: improvement_pct(raw.mae, compressed.mae),
            mse_improvement_pct: improvement_pct(raw.mse, compressed.mse),
        }
    }
}

/// What the "compressed" models are trained and tested on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompressedForm {
    /// Interpolated reconstruction at every raw timestamp; same split
    /// indices as the raw data.
    #[default]
    Reconstructed,
    /// Only the archived samples, split at the raw train/test boundary time.
    Retained,
}

impl FromStr for CompressedForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reconstructed" => Ok(CompressedForm::Reconstructed),
            "retained" => Ok(CompressedForm::Retained),
            _ => Err(Error::validation(format!("unknown compressed form `{s}`"))),
        }
    }
}

/// Train/test splits of the raw series and of its compressed variant.
#[derive(Debug, Clone)]
pub struct ComparisonData {
    pub raw_train: TimeSeries,
    pub raw_test: TimeSeries,
    pub comp_train: TimeSeries,
    pub comp_test: TimeSeries,
}

impl ComparisonData {
    pub fn prepare(
        raw: &TimeSeries,
        deviation: Deviation,
        train_fraction: f64,
        form: CompressedForm,
        max_order: usize,
    ) -> Result<Self> {
        let (raw_train, raw_test) = train_test_split(raw, train_fraction, max_order)?;
        let comp = compress(raw, deviation)?;
        let (comp_train, comp_test) = match form {
            CompressedForm::Reconstructed => {
                let recon = reconstruct_like(&comp, raw)?;
                (
                    recon.slice(0, raw_train.len())?,
                    recon.slice(raw_train.len(), raw.len())?,
                )
            }
            CompressedForm::Retained => {
                let cutoff = *raw_train
                    .timestamps()
                    .last()
                    .expect("split guarantees a non-empty train set");
                let r = &comp.retained;
                let k = r.timestamps().partition_point(|&t| t <= cutoff);
                let min = max_order + 2;
                if k < min || r.len() - k < min {
                    return Err(Error::validation(format!(
                        "only {k} retained train / {} test samples at deviation {deviation}; each needs >= {min}",
                        r.len() - k
                    )));
                }
                (r.slice(0, k)?, r.slice(k, r.len())?)
            }
        };
        Ok(Self {
            raw_train,
            raw_test,
            comp_train,
            comp_test,
        })
    }

    /// Fits and evaluates one model on both variants.
    pub fn compare(&self, kind: ModelKind) -> Result<ModelComparison> {
        let run = |train: &TimeSeries, test: &TimeSeries| -> Result<EvalReport> {
            let fitted = fit(train, kind)?;
            evaluate(&fitted, test, train)
        };
        let raw = run(&self.raw_train, &self.raw_test)?;
        let compressed = run(&self.comp_train, &self.comp_test)?;
        Ok(ModelComparison {
            raw,
            compressed,
            improvement: ImprovementReport::between(&raw, &compressed),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelComparison {
    pub raw: EvalReport,
    pub compressed: EvalReport,
    pub improvement: ImprovementReport,
}

/// Raw-versus-compressed accuracy for each model kind. Fails on the first
/// model that cannot be fitted.
pub fn compare_raw_vs_compressed(
    raw: &TimeSeries,
    deviation: Deviation,
    kinds: &[ModelKind],
    train_fraction: f64,
    form: CompressedForm,
) -> Result<Vec<ModelComparison>> {
    if kinds.is_empty() {
        return Err(Error::validation("no models requested"));
    }
    let max_order = kinds.iter().map(|k| k.max_order()).max().unwrap_or(0);
    let data = ComparisonData::prepare(raw, deviation, train_fraction, form, max_order)?;
    kinds.iter().map(|&k| data.compare(k)).collect()
}

/// `model,dataset,mae,mse`
pub fn write_eval_csv<'a, W, I>(rows: I, out: W) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = (&'a str, &'a EvalReport)>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["model", "dataset", "mae", "mse"])?;
    for (dataset, r) in rows {
        w.write_record([
            r.kind.to_string(),
            dataset.to_string(),
            r.mae.to_string(),
            r.mse.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `model,mae_improvement_pct,mse_improvement_pct`
pub fn write_improvement_csv<'a, W, I>(rows: I, out: W) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a ImprovementReport>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["model", "mae_improvement_pct", "mse_improvement_pct"])?;
    for r in rows {
        w.write_record([
            r.kind.to_string(),
            r.mae_improvement_pct.to_string(),
            r.mse_improvement_pct.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
