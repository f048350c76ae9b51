use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use histolab_core::metrics::{write_sweep_csv, write_sweep_json};
use histolab_core::sdt::report as compression_report;
use histolab_core::{
    compress, distortion, fluctuation_index, inject_anomalies, recall_vs_compression_with, reconstruct_like, rmse,
    suggest_policy, sweep_with, threshold_for, ComparisonData, Deviation, EvalReport, ModelComparison, ModelKind,
    RecallCurve, SignalKind, SignalStats, SweepRow, ThresholdPolicy, TimeSeries,
};
use serde::Serialize;

use crate::config::{AnomalyConfig, ExperimentConfig, PolicySelector, SignalSource};
use crate::error::{CliError, CliResult};
use crate::plot::{Axis, Chart, Series};

/// Reference sweep deviations for the composite signal.
pub const SWEEP_DEVIATIONS: [f64; 6] = [0.2, 0.3, 0.5, 0.7, 1.0, 1.05];

/// Recall-curve deviations for the flat-plus-spikes corpus signal (noise
/// std 0.1, spikes of 5 sigma), reaching past the spike height.
pub const CURVE_DEVIATIONS: [f64; 9] = [0.0, 0.025, 0.05, 0.1, 0.2, 0.3, 0.4, 0.6, 0.8];

const TIMINGS: &str = "timings.json";

#[derive(Debug, Clone, Copy)]
struct Artifact {
    step: &'static str,
    file: &'static str,
    required: bool,
}

const fn art(step: &'static str, file: &'static str, required: bool) -> Artifact {
    Artifact { step, file, required }
}

const ARTIFACTS: &[Artifact] = &[
    art("generate", "signal.csv", true),
    art("generate", "stats.json", true),
    art("sweep", "sweep.csv", true),
    art("sweep", "sweep.json", false),
    art("sweep", "sweep.svg", true),
    art("sweep", "suggestion.json", false),
    art("sweep", "compressed.csv", false),
    art("sweep", "compressed.json", false),
    art("anomaly", "recall_curve.csv", true),
    art("anomaly", "recall_curve.svg", true),
    art("anomaly", "anomaly_labels.csv", false),
    art("models", "models_raw.csv", true),
    art("models", "models_compressed.csv", true),
    art("models", "improvements.csv", true),
    art("corpus", "signal_types.csv", false),
    art("corpus", "policies.csv", false),
    art("corpus", "temperature/models_raw.csv", false),
    art("corpus", "temperature/models_compressed.csv", false),
    art("corpus", "temperature/improvements.csv", false),
    art("corpus", "vibration/models_raw.csv", false),
    art("corpus", "vibration/models_compressed.csv", false),
    art("corpus", "vibration/improvements.csv", false),
];

#[derive(Debug, Clone)]
pub struct Context {
    pub config: ExperimentConfig,
    pub out: PathBuf,
    pub parallel: bool,
}

impl Context {
    pub fn new(config: ExperimentConfig, parallel: bool) -> Self {
        let out = config.output_dir();
        Self { config, out, parallel }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn create(&self, name: &str) -> CliResult<BufWriter<File>> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| CliError::io(&path, e))
    }

    fn write_with<F>(&self, name: &str, body: F) -> CliResult<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> CliResult<()>,
    {
        let mut w = self.create(name)?;
        body(&mut w)?;
        w.flush().map_err(|e| CliError::io(&self.path(name), e))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<()> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(histolab_core::Error::from)?;
            writeln!(w).map_err(|e| CliError::io(&self.path(name), e))
        })
    }

    fn write_text(&self, name: &str, text: &str) -> CliResult<()> {
        self.write_with(name, |w| {
            w.write_all(text.as_bytes())
                .map_err(|e| CliError::io(&self.path(name), e))
        })
    }

    fn with_signal(&self, signal: SignalSource) -> Self {
        let mut ctx = self.clone();
        ctx.config.signal = signal;
        ctx
    }
}

fn record_timing(out: &Path, step: &str, seconds: f64) -> CliResult<()> {
    let path = out.join(TIMINGS);
    let mut timings: BTreeMap<String, f64> = fs::read_to_string(&path)
        .ok()
        .and_then(|s| serde_json::from_str(&s).ok())
        .unwrap_or_default();
    timings.insert(step.to_string(), seconds);
    let text = serde_json::to_string_pretty(&timings).map_err(histolab_core::Error::from)?;
    fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
}

/// Runs `step` and records its wall-clock time in the output directory.
pub fn timed(ctx: &Context, step: &str, f: impl FnOnce(&Context) -> CliResult<()>) -> CliResult<()> {
    fs::create_dir_all(&ctx.out).map_err(|e| CliError::io(&ctx.out, e))?;
    let start = Instant::now();
    f(ctx)?;
    record_timing(&ctx.out, step, start.elapsed().as_secs_f64())
}

#[derive(Debug, Serialize)]
struct StatsDoc {
    mean: f64,
    std: f64,
    min: f64,
    max: f64,
    range: f64,
    n: usize,
    /// `null` for a flat signal.
    fluctuation_index: Option<f64>,
}

impl From<&SignalStats> for StatsDoc {
    fn from(s: &SignalStats) -> Self {
        Self {
            mean: s.mean,
            std: s.std_dev,
            min: s.min,
            max: s.max,
            range: s.range,
            n: s.n,
            fluctuation_index: fluctuation_index(s).ok().map(|f| f.ratio()),
        }
    }
}

pub fn generate(ctx: &Context) -> CliResult<()> {
    let ts = ctx.config.load_signal()?;
    let stats = ExperimentConfig::stats(&ts)?;
    ctx.write_with("signal.csv", |w| Ok(ts.write_csv(w)?))?;
    ctx.write_json("stats.json", &StatsDoc::from(&stats))
}

#[derive(Debug, Serialize)]
struct Suggestion {
    ratio: f64,
    policy: String,
    threshold: Deviation,
}

fn degenerate_for_auto(e: CliError) -> CliError {
    match e {
        CliError::Core(histolab_core::Error::DegenerateSignal(msg)) => {
            CliError::Degenerate(format!("degenerate signal, cannot suggest a threshold: {msg}"))
        }
        other => other,
    }
}

pub fn sweep(ctx: &Context) -> CliResult<()> {
    let cfg = &ctx.config;
    let mut deviations = cfg.deviations()?;
    if deviations.is_empty() && cfg.policy.is_none() {
        return Err(CliError::usage("sweep needs --thresholds or --policy"));
    }
    let ts = cfg.load_signal()?;
    let stats = ExperimentConfig::stats(&ts)?;

    if let Some(selector) = cfg.policy {
        let (policy, d) = selector.resolve(&stats).map_err(degenerate_for_auto)?;
        if selector == PolicySelector::Auto {
            let ratio = fluctuation_index(&stats)?.ratio();
            ctx.write_json(
                "suggestion.json",
                &Suggestion {
                    ratio,
                    policy: policy.name().into(),
                    threshold: d,
                },
            )?;
        }
        let comp = compress(&ts, d)?;
        ctx.write_with("compressed.csv", |w| Ok(comp.write_csv(w)?))?;
        ctx.write_json("compressed.json", &comp.metadata(Some(policy)))?;
        deviations.push(d);
    }

    let rows = sweep_with(&ts, &deviations, ctx.parallel)?;
    ctx.write_with("sweep.csv", |w| Ok(write_sweep_csv(&rows, w)?))?;
    ctx.write_with("sweep.json", |w| Ok(write_sweep_json(&rows, w)?))?;
    ctx.write_text("sweep.svg", &sweep_chart(&rows).to_svg())
}

fn sweep_chart(rows: &[SweepRow]) -> Chart {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| a.deviation.value().total_cmp(&b.deviation.value()));
    let pick = |f: fn(&SweepRow) -> f64| sorted.iter().map(|r| (r.deviation.value(), f(r))).collect();
    Chart {
        title: "Compression threshold vs RMSE".into(),
        x_label: "deviation".into(),
        y_label: "interpolated RMSE".into(),
        y2_label: Some("data reduction (%)".into()),
        series: vec![
            Series::new("RMSE", pick(|r| r.rmse_interpolated), Axis::Left),
            Series::new("data reduction %", pick(|r| r.data_reduction_pct), Axis::Right),
        ],
    }
}

/// Deviations for the recall curve: explicit thresholds, then the policy
/// deviation; with neither, lossless plus the three policies in order.
fn curve_deviations(cfg: &ExperimentConfig, stats: &SignalStats) -> CliResult<Vec<Deviation>> {
    let mut devs = cfg.deviations()?;
    if let Some(selector) = cfg.policy {
        devs.push(selector.resolve(stats).map_err(degenerate_for_auto)?.1);
    }
    if devs.is_empty() {
        devs.push(Deviation::ZERO);
        let mut ladder = [
            ThresholdPolicy::Conservative,
            ThresholdPolicy::Moderate,
            ThresholdPolicy::Aggressive,
        ]
        .iter()
        .map(|&p| threshold_for(p, stats))
        .collect::<Result<Vec<_>, _>>()?;
        ladder.sort_by(|a, b| a.value().total_cmp(&b.value()));
        devs.extend(ladder);
    }
    Ok(devs)
}

pub fn anomaly(ctx: &Context) -> CliResult<()> {
    let cfg = &ctx.config;
    let settings = cfg.anomaly.clone().unwrap_or_default();
    settings.detection.validate()?;
    let base = cfg.load_signal()?;
    let (ts, labels) = inject_anomalies(
        &base,
        settings.count,
        settings.amplitude_sigma,
        settings.width,
        cfg.seed().wrapping_mul(7919),
    )?;
    let stats = ExperimentConfig::stats(&ts)?;
    let devs = curve_deviations(cfg, &stats)?;
    let curve = recall_vs_compression_with(&ts, &labels, &devs, &settings.detection, ctx.parallel)?;
    ctx.write_with("anomaly_labels.csv", |w| Ok(labels.write_csv(w)?))?;
    ctx.write_with("recall_curve.csv", |w| Ok(curve.write_csv(w)?))?;
    ctx.write_text("recall_curve.svg", &recall_chart(&curve).to_svg())
}

fn recall_chart(curve: &RecallCurve) -> Chart {
    let mut points = curve.points.clone();
    points.sort_by(|a, b| a.data_reduction_pct.total_cmp(&b.data_reduction_pct));
    let pick =
        |f: fn(&histolab_core::RecallPoint) -> f64| points.iter().map(|p| (p.data_reduction_pct, f(p))).collect();
    Chart {
        title: "Anomaly detection recall vs compression".into(),
        x_label: "data reduction (%)".into(),
        y_label: "score".into(),
        y2_label: None,
        series: vec![
            Series::new("recall", pick(|p| p.recall), Axis::Left),
            Series::new("precision", pick(|p| p.precision), Axis::Left),
        ],
    }
}

fn model_deviation(cfg: &ExperimentConfig, stats: &SignalStats) -> CliResult<Deviation> {
    if let Some(d) = cfg.model_deviation {
        return Deviation::new(d).map_err(|e| CliError::usage(e.to_string()));
    }
    let selector = cfg.policy.unwrap_or(PolicySelector::Auto);
    Ok(selector.resolve(stats).map_err(degenerate_for_auto)?.1)
}

type Outcome = (ModelKind, Result<ModelComparison, String>);

pub fn models(ctx: &Context) -> CliResult<()> {
    models_into(ctx, "")
}

fn models_into(ctx: &Context, prefix: &str) -> CliResult<()> {
    let cfg = &ctx.config;
    let kinds = cfg.models.clone().unwrap_or_else(ModelKind::defaults);
    if kinds.is_empty() {
        return Err(CliError::usage("models list is empty"));
    }
    for k in &kinds {
        k.validate()?;
    }
    let ts = cfg.load_signal()?;
    let stats = ExperimentConfig::stats(&ts)?;
    let deviation = model_deviation(cfg, &stats)?;
    let max_order = kinds.iter().map(|k| k.max_order()).max().unwrap_or(0);
    let data = ComparisonData::prepare(&ts, deviation, cfg.train_fraction, cfg.compressed_form, max_order)?;

    let outcomes: Vec<Outcome> = kinds
        .iter()
        .map(|&k| {
            let res = data.compare(k).map_err(|e| {
                eprintln!("histolab: {k}: {e}");
                e.to_string()
            });
            (k, res)
        })
        .collect();

    let name = |f: &str| format!("{prefix}{f}");
    ctx.write_with(&name("models_raw.csv"), |w| write_eval(w, "raw", &outcomes, |c| &c.raw))?;
    ctx.write_with(&name("models_compressed.csv"), |w| {
        write_eval(w, "compressed", &outcomes, |c| &c.compressed)
    })?;
    ctx.write_with(&name("improvements.csv"), |w| write_improvements(w, &outcomes))?;

    if outcomes.iter().all(|(_, r)| r.is_err()) {
        return Err(CliError::Degenerate("no model could be fitted".into()));
    }
    Ok(())
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> CliResult<()> {
    w.flush().map_err(histolab_core::Error::from)?;
    Ok(())
}

/// The library layout with a trailing `status` column (`ok` or `error`).
fn write_eval<W: Write>(
    out: W,
    dataset: &str,
    outcomes: &[Outcome],
    pick: fn(&ModelComparison) -> &EvalReport,
) -> CliResult<()> {
    let mut w = csv_writer(out);
    let rec = |w: &mut csv::Writer<W>, row: [String; 5]| w.write_record(row).map_err(histolab_core::Error::from);
    rec(&mut w, ["model", "dataset", "mae", "mse", "status"].map(String::from))?;
    for (kind, res) in outcomes {
        let row = match res {
            Ok(c) => {
                let r = pick(c);
                [
                    kind.to_string(),
                    dataset.into(),
                    r.mae.to_string(),
                    r.mse.to_string(),
                    "ok".into(),
                ]
            }
            Err(_) => [
                kind.to_string(),
                dataset.into(),
                String::new(),
                String::new(),
                "error".into(),
            ],
        };
        rec(&mut w, row)?;
    }
    finish(w)
}

fn write_improvements<W: Write>(out: W, outcomes: &[Outcome]) -> CliResult<()> {
    let mut w = csv_writer(out);
    let rec = |w: &mut csv::Writer<W>, row: [String; 4]| w.write_record(row).map_err(histolab_core::Error::from);
    rec(
        &mut w,
        ["model", "mae_improvement_pct", "mse_improvement_pct", "status"].map(String::from),
    )?;
    for (kind, res) in outcomes {
        let row = match res {
            Ok(c) => [
                kind.to_string(),
                c.improvement.mae_improvement_pct.to_string(),
                c.improvement.mse_improvement_pct.to_string(),
                "ok".into(),
            ],
            Err(_) => [kind.to_string(), String::new(), String::new(), "error".into()],
        };
        rec(&mut w, row)?;
    }
    finish(w)
}

#[derive(Debug, Serialize)]
struct FileEntry {
    step: &'static str,
    path: String,
    bytes: u64,
}

#[derive(Debug, Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    config: serde_json::Value,
    files: Vec<FileEntry>,
    timings_s: BTreeMap<String, f64>,
}

pub fn report(ctx: &Context) -> CliResult<()> {
    write_manifest(
        ctx,
        serde_json::to_value(&ctx.config).map_err(histolab_core::Error::from)?,
    )
}

fn write_manifest(ctx: &Context, config: serde_json::Value) -> CliResult<()> {
    let missing: Vec<&str> = ARTIFACTS
        .iter()
        .filter(|a| a.required && !ctx.path(a.file).is_file())
        .map(|a| a.file)
        .collect();
    if !missing.is_empty() {
        return Err(CliError::MissingInput(format!(
            "{} in {}",
            missing.join(", "),
            ctx.out.display()
        )));
    }
    let files = ARTIFACTS
        .iter()
        .filter_map(|a| {
            let meta = fs::metadata(ctx.path(a.file)).ok()?;
            Some(FileEntry {
                step: a.step,
                path: a.file.to_string(),
                bytes: meta.len(),
            })
        })
        .collect();
    let timings_s = fs::read_to_string(ctx.path(TIMINGS))
        .ok()
        .and_then(|s| serde_json::from_str(&s).ok())
        .unwrap_or_default();
    let manifest = Manifest {
        tool: "histolab",
        version: env!("CARGO_PKG_VERSION"),
        config,
        files,
        timings_s,
    };
    ctx.write_json("manifest.json", &manifest)
}

fn preset(kind: SignalKind) -> SignalSource {
    SignalSource::Preset { preset: kind, n: None }
}

fn signal_types(ctx: &Context) -> CliResult<()> {
    let mut w = csv_writer(ctx.create("signal_types.csv")?);
    let mut rec = |row: Vec<String>| w.write_record(row).map_err(histolab_core::Error::from);
    rec([
        "signal",
        "std",
        "range",
        "fluctuation_index",
        "policy",
        "threshold",
        "compressed_points",
        "data_reduction_pct",
        "rmse",
    ]
    .map(String::from)
    .to_vec())?;
    for kind in [SignalKind::Temperature, SignalKind::Vibration, SignalKind::Composite] {
        let ts = preset(kind).load(ctx.config.seed())?;
        let stats = ExperimentConfig::stats(&ts)?;
        let (policy, d) = suggest_policy(&stats)?;
        let comp = compress(&ts, d)?;
        let rep = compression_report(&ts, &comp)?;
        let err = rmse(&ts, &reconstruct_like(&comp, &ts)?)?;
        rec(vec![
            kind_name(kind).into(),
            stats.std_dev.to_string(),
            stats.range.to_string(),
            fluctuation_index(&stats)?.ratio().to_string(),
            policy.name().into(),
            d.to_string(),
            rep.compressed_points.to_string(),
            rep.data_reduction_pct.to_string(),
            err.to_string(),
        ])?;
    }
    finish(w)
}

fn kind_name(kind: SignalKind) -> &'static str {
    match kind {
        SignalKind::Temperature => "temperature",
        SignalKind::Vibration => "vibration",
        SignalKind::Composite => "composite",
        SignalKind::Flat => "flat",
    }
}

fn policies(ctx: &Context, ts: &TimeSeries) -> CliResult<()> {
    let stats = ExperimentConfig::stats(ts)?;
    let mut w = csv_writer(ctx.create("policies.csv")?);
    let mut rec = |row: Vec<String>| w.write_record(row).map_err(histolab_core::Error::from);
    rec([
        "policy",
        "threshold",
        "compressed_points",
        "data_reduction_pct",
        "rmse",
        "mean_deviation_pct",
        "std_underestimation_pct",
    ]
    .map(String::from)
    .to_vec())?;
    for policy in [
        ThresholdPolicy::Conservative,
        ThresholdPolicy::Moderate,
        ThresholdPolicy::Aggressive,
    ] {
        let d = threshold_for(policy, &stats)?;
        let comp = compress(ts, d)?;
        let rep = compression_report(ts, &comp)?;
        let recon = reconstruct_like(&comp, ts)?;
        let dist = distortion(ts, &recon)?;
        rec(vec![
            policy.name().into(),
            d.to_string(),
            rep.compressed_points.to_string(),
            rep.data_reduction_pct.to_string(),
            rmse(ts, &recon)?.to_string(),
            dist.mean_deviation_pct.to_string(),
            dist.std_underestimation_pct.to_string(),
        ])?;
    }
    finish(w)
}

/// The whole experiment suite on the built-in presets: composite signal
/// statistics, sweep and policy table, per-preset suggestions, the
/// flat-plus-spikes recall curve and model comparisons for the composite,
/// temperature and vibration presets. Only the seed, output directory and
/// parallel flag are taken from the configuration.
pub fn corpus(ctx: &Context) -> CliResult<()> {
    let base = ExperimentConfig {
        seed: Some(ctx.config.seed()),
        output_dir: Some(ctx.out.clone()),
        ..ExperimentConfig::default()
    };
    let base = Context {
        config: base,
        out: ctx.out.clone(),
        parallel: ctx.parallel,
    };
    let composite = base.with_signal(preset(SignalKind::Composite));

    timed(&composite, "generate", generate)?;

    let mut sweep_ctx = composite.clone();
    sweep_ctx.config.thresholds = SWEEP_DEVIATIONS.to_vec();
    sweep_ctx.config.policy = Some(PolicySelector::Auto);
    timed(&sweep_ctx, "sweep", sweep)?;

    timed(&composite, "policies", |c| policies(c, &c.config.load_signal()?))?;
    timed(&base, "signal_types", signal_types)?;

    let mut spikes = base.with_signal(preset(SignalKind::Flat));
    spikes.config.anomaly = Some(AnomalyConfig::default());
    spikes.config.thresholds = CURVE_DEVIATIONS.to_vec();
    timed(&spikes, "anomaly", anomaly)?;

    timed(&composite, "models", models)?;
    for kind in [SignalKind::Temperature, SignalKind::Vibration] {
        let c = base.with_signal(preset(kind));
        let prefix = format!("{}/", kind_name(kind));
        timed(&c, &format!("models_{}", kind_name(kind)), |c| models_into(c, &prefix))?;
    }

    let echo = serde_json::json!({ "corpus": true, "seed": base.config.seed(), "parallel": base.parallel });
    write_manifest(&base, echo)
}
