//! Deterministic synthetic sensor signals and labelled anomaly injection.
//!
//! Every random draw goes through [`rng_for`], a `ChaCha8Rng` seeded with
//! `seed_from_u64`. ChaCha output is specified independently of platform
//! and word size, so a seed reproduces the same series on any build of this
//! crate. Gaussian noise is drawn with `rand_distr::Normal`.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{describe, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalKind {
    Temperature,
    Vibration,
    Composite,
    Flat,
}

/// One sinusoidal component: `amplitude * sin(2*pi*i/period + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Seasonal {
    pub amplitude: f64,
    /// Period in samples.
    pub period: f64,
    #[serde(default)]
    pub phase: f64,
}

impl Seasonal {
    pub const fn new(amplitude: f64, period: f64, phase: f64) -> Self {
        Self {
            amplitude,
            period,
            phase,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub kind: SignalKind,
    pub n: usize,
    pub dt: f64,
    pub base: f64,
    /// Units per sample step.
    pub trend_slope: f64,
    #[serde(default)]
    pub seasonal: Vec<Seasonal>,
    pub noise_std: f64,
    pub seed: u64,
}

impl SignalSpec {
    /// Slow single cycle on a gentle drift with sensor-level noise.
    /// Std about 0.96 and range about 4.8 over 1000 samples.
    pub fn temperature(seed: u64) -> Self {
        Self {
            kind: SignalKind::Temperature,
            n: 1000,
            dt: 1.0,
            base: 20.0,
            trend_slope: 0.00322,
            seasonal: vec![Seasonal::new(1.114, 800.0, 5.497)],
            noise_std: 0.01,
            seed,
        }
    }

    /// Fast dominant oscillation with a harmonic and broadband noise.
    /// Std about 3.55 and range about 11.2 over 1000 samples.
    pub fn vibration(seed: u64) -> Self {
        Self {
            kind: SignalKind::Vibration,
            n: 1000,
            dt: 1.0,
            base: 0.0,
            trend_slope: 0.0,
            seasonal: vec![Seasonal::new(5.0, 25.0, 0.0), Seasonal::new(0.4, 9.7, 1.0)],
            noise_std: 0.15,
            seed,
        }
    }

    /// Slow cycle with two faster incommensurate components.
    /// Std about 7.13 and range about 22.0 over 1000 samples.
    pub fn composite(seed: u64) -> Self {
        Self {
            kind: SignalKind::Composite,
            n: 1000,
            dt: 1.0,
            base: 50.0,
            trend_slope: 0.0,
            seasonal: vec![
                Seasonal::new(10.0433, 250.0, 0.3),
                Seasonal::new(0.8, 23.7, 1.1),
                Seasonal::new(0.4, 11.9, 2.0),
            ],
            noise_std: 0.05,
            seed,
        }
    }

    /// Constant level plus Gaussian noise; the carrier for spike injection.
    pub fn flat(n: usize, base: f64, noise_std: f64, seed: u64) -> Self {
        Self {
            kind: SignalKind::Flat,
            n,
            dt: 1.0,
            base,
            trend_slope: 0.0,
            seasonal: Vec::new(),
            noise_std,
            seed,
        }
    }

    pub fn preset(kind: SignalKind, seed: u64) -> Self {
        match kind {
            SignalKind::Temperature => Self::temperature(seed),
            SignalKind::Vibration => Self::vibration(seed),
            SignalKind::Composite => Self::composite(seed),
            SignalKind::Flat => Self::flat(1000, 10.0, 0.1, seed),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::validation(format!("signal needs n >= 2, got {}", self.n)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::validation(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::validation(format!(
                "noise_std must be >= 0, got {}",
                self.noise_std
            )));
        }
        if let Some(s) = self.seasonal.iter().find(|s| !(s.period > 0.0 && s.period.is_finite())) {
            return Err(Error::validation(format!(
                "seasonal period must be positive, got {}",
                s.period
            )));
        }
        if !self.base.is_finite() || !self.trend_slope.is_finite() {
            return Err(Error::validation("base and trend_slope must be finite"));
        }
        Ok(())
    }
}

pub(crate) fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn generate(spec: &SignalSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed);
    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| Error::validation(format!("noise distribution: {e}")))?;
    let values = (0..spec.n)
        .map(|i| {
            let x = i as f64;
            let mut v = spec.base + spec.trend_slope * x;
            for s in &spec.seasonal {
                v += s.amplitude * (2.0 * PI * x / s.period + s.phase).sin();
            }
            if spec.noise_std > 0.0 {
                v += noise.sample(&mut rng);
            }
            v
        })
        .collect();
    let unit = match spec.kind {
        SignalKind::Temperature => "degC",
        SignalKind::Vibration => "mm/s",
        SignalKind::Composite | SignalKind::Flat => "units",
    };
    Ok(TimeSeries::from_values(values, spec.dt)?.with_unit(unit))
}

/// Ground truth for injected anomalies. Window `k` covers sample indices
/// `indices[k] .. indices[k] + width`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AnomalyLabels {
    pub indices: Vec<usize>,
    pub amplitudes: Vec<f64>,
    pub width: usize,
}

impl AnomalyLabels {
    pub fn new(indices: Vec<usize>, amplitudes: Vec<f64>, width: usize) -> Result<Self> {
        if indices.len() != amplitudes.len() {
            return Err(Error::validation("one amplitude per anomaly index required"));
        }
        if width == 0 && !indices.is_empty() {
            return Err(Error::validation("anomaly width must be >= 1"));
        }
        if indices.windows(2).any(|w| w[1] < w[0] + width) {
            return Err(Error::validation("anomaly windows must be sorted and non-overlapping"));
        }
        Ok(Self {
            indices,
            amplitudes,
            width,
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `(first, last)` sample index of each window, inclusive.
    pub fn windows(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.indices.iter().map(move |&i| (i, i + self.width.max(1) - 1))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["index", "amplitude", "width"])?;
        for (i, a) in self.indices.iter().zip(&self.amplitudes) {
            w.write_record([i.to_string(), a.to_string(), self.width.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Adds each labelled rectangular spike to the series.
pub fn apply_anomalies(ts: &TimeSeries, labels: &AnomalyLabels) -> Result<TimeSeries> {
    if let Some((_, last)) = labels.windows().last() {
        if last >= ts.len() {
            return Err(Error::validation(format!(
                "anomaly window ends at {last}, series has {} samples",
                ts.len()
            )));
        }
    }
    let mut values = ts.values().to_vec();
    for ((first, last), amp) in labels.windows().zip(&labels.amplitudes) {
        for v in &mut values[first..=last] {
            *v += amp;
        }
    }
    ts.with_values(values)
}

/// Places `count` non-overlapping spikes of height `amplitude_sigma * std`
/// and length `width` at seeded positions. The first and last 2% of the
/// series never receive an anomaly, and windows are separated by at least
/// one untouched sample.
pub fn inject_anomalies(
    ts: &TimeSeries,
    count: usize,
    amplitude_sigma: f64,
    width: usize,
    seed: u64,
) -> Result<(TimeSeries, AnomalyLabels)> {
    if width == 0 {
        return Err(Error::validation("anomaly width must be >= 1"));
    }
    if !amplitude_sigma.is_finite() {
        return Err(Error::validation("amplitude_sigma must be finite"));
    }
    if count == 0 {
        return Ok((
            ts.clone(),
            AnomalyLabels {
                width,
                ..Default::default()
            },
        ));
    }
    let n = ts.len();
    let margin = (n as f64 * 0.02).ceil() as usize;
    let usable = n.saturating_sub(2 * margin);
    // Each anomaly reserves its window plus a guard sample on either side.
    let block = width + 2;
    let needed = count * block;
    if needed >= n || needed > usable {
        return Err(Error::Capacity(format!(
            "{count} anomalies of width {width} need {needed} samples, only {usable} usable of {n}"
        )));
    }
    let slack = usable - needed;

    // Uniform placement: sorted cut points split the slack into count+1 gaps.
    let mut rng = rng_for(seed);
    let mut cuts: Vec<usize> = (0..count).map(|_| rng.random_range(0..=slack)).collect();
    cuts.sort_unstable();
    let indices: Vec<usize> = cuts
        .iter()
        .enumerate()
        .map(|(k, &c)| margin + c + k * block + 1)
        .collect();

    let amplitude = amplitude_sigma * describe(ts)?.std_dev;
    let labels = AnomalyLabels::new(indices, vec![amplitude; count], width)?;
    let out = apply_anomalies(ts, &labels)?;
    Ok((out, labels))
}
