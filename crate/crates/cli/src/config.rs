//! JSON experiment configuration. Every field is optional; command-line
//! flags override whatever the file says.
//!
//! ```json
//! {
//!   "signal": { "preset": "composite" },
//!   "seed": 42,
//!   "thresholds": [0.2, 0.5, 1.0],
//!   "policy": "auto",
//!   "anomaly": { "count": 10, "amplitude_sigma": 5.0, "width": 1 },
//!   "models": ["AR(2)", "MA(2)", "ARMA(2,2)", "LagLinear(10)"],
//!   "train_fraction": 0.8,
//!   "output_dir": "out"
//! }
//! ```
//!
//! `signal` is one of `{"preset": kind, "n": optional}`, `{"file": path}`
//! (a `timestamp,value` CSV) or a full signal specification.

use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use histolab_core::{
    describe, generate, suggest_policy, threshold_for, CompressedForm, DetectionParams, Deviation, ModelKind,
    SignalKind, SignalSpec, SignalStats, ThresholdPolicy, TimeSeries,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_OUT: &str = "histolab-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SignalSource {
    File {
        file: PathBuf,
    },
    Preset {
        preset: SignalKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
    },
    Spec(SignalSpec),
}

impl Default for SignalSource {
    fn default() -> Self {
        SignalSource::Preset {
            preset: SignalKind::Composite,
            n: None,
        }
    }
}

impl SignalSource {
    pub fn load(&self, seed: u64) -> CliResult<TimeSeries> {
        match self {
            SignalSource::File { file } => {
                let f = File::open(file).map_err(|e| CliError::io(file, e))?;
                Ok(TimeSeries::read_csv(f)?)
            }
            SignalSource::Preset { preset, n } => {
                let mut spec = SignalSpec::preset(*preset, seed);
                if let Some(n) = n {
                    spec.n = *n;
                }
                Ok(generate(&spec)?)
            }
            SignalSource::Spec(spec) => Ok(generate(&SignalSpec { seed, ..spec.clone() })?),
        }
    }
}

/// `auto` or a concrete threshold policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicySelector {
    Auto,
    Policy(ThresholdPolicy),
}

impl PolicySelector {
    /// The chosen policy and its deviation for a signal with `stats`.
    pub fn resolve(self, stats: &SignalStats) -> CliResult<(ThresholdPolicy, Deviation)> {
        match self {
            PolicySelector::Auto => Ok(suggest_policy(stats)?),
            PolicySelector::Policy(p) => Ok((p, threshold_for(p, stats)?)),
        }
    }
}

impl FromStr for PolicySelector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim().eq_ignore_ascii_case("auto") {
            return Ok(PolicySelector::Auto);
        }
        ThresholdPolicy::from_str(s)
            .map(PolicySelector::Policy)
            .map_err(|e| e.to_string())
    }
}

impl fmt::Display for PolicySelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySelector::Auto => f.write_str("auto"),
            PolicySelector::Policy(p) => p.fmt(f),
        }
    }
}

impl Serialize for PolicySelector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PolicySelector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnomalyConfig {
    pub count: usize,
    pub amplitude_sigma: f64,
    pub width: usize,
    pub detection: DetectionParams,
}

impl Default for AnomalyConfig {
    fn default() -> Self {
        Self {
            count: 10,
            amplitude_sigma: 5.0,
            width: 1,
            detection: DetectionParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub signal: SignalSource,
    pub seed: Option<u64>,
    pub thresholds: Vec<f64>,
    pub policy: Option<PolicySelector>,
    pub anomaly: Option<AnomalyConfig>,
    pub models: Option<Vec<ModelKind>>,
    /// Deviation used for the model comparison; defaults to the policy
    /// deviation, or the suggested one when no policy is set.
    pub model_deviation: Option<f64>,
    pub train_fraction: f64,
    pub compressed_form: CompressedForm,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            signal: SignalSource::default(),
            seed: None,
            thresholds: Vec::new(),
            policy: None,
            anomaly: None,
            models: None,
            model_deviation: None,
            train_fraction: 0.8,
            compressed_form: CompressedForm::default(),
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    pub fn deviations(&self) -> CliResult<Vec<Deviation>> {
        self.thresholds
            .iter()
            .map(|&t| Deviation::new(t).map_err(|e| CliError::usage(e.to_string())))
            .collect()
    }

    pub fn load_signal(&self) -> CliResult<TimeSeries> {
        self.signal.load(self.seed())
    }

    pub fn stats(ts: &TimeSeries) -> CliResult<SignalStats> {
        Ok(describe(ts)?)
    }
}
