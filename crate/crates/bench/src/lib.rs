//! Inputs shared by the benchmarks.

use histolab_core::{generate, Deviation, SignalKind, SignalSpec, TimeSeries};

/// A preset signal stretched to `n` samples.
pub fn preset(kind: SignalKind, n: usize, seed: u64) -> TimeSeries {
    let spec = SignalSpec {
        n,
        ..SignalSpec::preset(kind, seed)
    };
    generate(&spec).expect("preset specs are valid")
}

pub fn deviations(values: &[f64]) -> Vec<Deviation> {
    values
        .iter()
        .map(|&v| Deviation::new(v).expect("non-negative"))
        .collect()
}
