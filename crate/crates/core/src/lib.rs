//! Swinging-door trending compression for historian-style time series,
//! with signal-aware threshold selection and tools to measure what the
//! compression costs downstream analytics.
//!
//! - [`signal`]: seeded synthetic signals and labelled anomaly injection
//! - [`sdt`]: the compressor, threshold policies and the fluctuation-index rule
//! - [`metrics`]: interpolated reconstruction, RMSE/MAE/MSE, distortion, sweeps
//! - [`anomaly`]: trailing z-score detector and recall-versus-compression curves
//! - [`forecast`]: AR/MA/ARMA/lagged-regression accuracy on raw vs compressed data
//!
//! ```
//! use histolab_core::{compress, describe, generate, suggest_policy, SignalSpec};
//!
//! let ts = generate(&SignalSpec::composite(42)).unwrap();
//! let (policy, deviation) = suggest_policy(&describe(&ts).unwrap()).unwrap();
//! let comp = compress(&ts, deviation).unwrap();
//! assert!(comp.len() < ts.len());
//! println!("{policy}: kept {} of {}", comp.len(), ts.len());
//! ```

pub mod anomaly;
pub mod error;
pub mod forecast;
pub mod metrics;
pub mod sdt;
pub mod series;
pub mod signal;

pub use anomaly::{
    detect, recall_precision, recall_vs_compression, recall_vs_compression_with, score_raw, DetectionParams,
    RecallCurve, RecallPoint,
};
pub use error::{Error, Result};
pub use forecast::{
    compare_raw_vs_compressed, evaluate, fit, improvement_pct, train_test_split, ComparisonData, CompressedForm,
    EvalReport, FitResult, ImprovementReport, ModelComparison, ModelKind,
};
pub use metrics::{
    distortion, mae, max_abs_error, mse, reconstruct, reconstruct_like, rmse, sweep, sweep_with, DistortionReport,
    SweepRow,
};
pub use sdt::{
    compress, fluctuation_index, report, suggest_policy, suggest_policy_with, threshold_for, CompressedSeries,
    CompressionMetadata, CompressionReport, Deviation, FluctuationIndex, PolicyBounds, SwingingDoor, ThresholdPolicy,
};
pub use series::{describe, SignalStats, TimeSeries};
pub use signal::{apply_anomalies, generate, inject_anomalies, AnomalyLabels, Seasonal, SignalKind, SignalSpec};
