use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use histolab_core::{describe, generate, inject_anomalies, score_raw, DetectionParams, SignalSpec, TimeSeries};
use tempfile::TempDir;

fn histolab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_histolab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("HISTOLAB_OUT")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn ok(o: Output) -> Output {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn write_config(dir: &Path, json: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, json).unwrap();
    path
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect()
}

fn column(rows: &[Vec<String>], k: usize) -> Vec<f64> {
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_is_deterministic_and_consistent() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(histolab(&["generate", "--seed", "42"], &a));
    ok(histolab(&["generate", "--seed", "42"], &b));
    for f in ["signal.csv", "stats.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let ts = TimeSeries::read_csv(fs::File::open(a.join("signal.csv")).unwrap()).unwrap();
    let s = describe(&ts).unwrap();
    let stats = json(&a.join("stats.json"));
    let fi = stats["fluctuation_index"].as_f64().unwrap();
    assert!((fi - s.std_dev / s.range).abs() <= 1e-12 * fi);
    assert_eq!(stats["n"], 1000);
}

#[test]
fn temperature_preset_calibration() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), r#"{"signal": {"preset": "temperature"}}"#);
    let out = tmp.path().join("out");
    ok(histolab(&["generate", "--config", cfg.to_str().unwrap()], &out));
    let std = json(&out.join("stats.json"))["std"].as_f64().unwrap();
    assert!((std - 0.96).abs() <= 0.15 * 0.96, "{std}");
}

#[test]
fn sweep_over_table_thresholds() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    ok(histolab(&["sweep", "--thresholds", "0.2,0.3,0.5,0.7,1.0,1.05"], &out));
    let rows = read_csv(&out.join("sweep.csv"));
    assert_eq!(rows.len(), 6);
    let rmse = column(&rows, 4);
    assert!(rmse.windows(2).all(|w| w[1] >= w[0]), "{rmse:?}");
    let from_json = json(&out.join("sweep.json"));
    assert_eq!(from_json.as_array().unwrap().len(), 6);
    assert!(!out.join("suggestion.json").exists());
}

#[test]
fn sweep_auto_suggestion_from_signal_file() {
    // Symmetric two-level signal with extremes at +-11.11 and std 7.13.
    let tmp = TempDir::new().unwrap();
    let n = 1000usize;
    let a: f64 = 11.11;
    let b = ((7.13f64.powi(2) * n as f64 - 2.0 * a * a) / (n - 2) as f64).sqrt();
    let values: Vec<f64> = (0..n)
        .map(|i| match i {
            0 => a,
            1 => -a,
            _ if i % 2 == 0 => b,
            _ => -b,
        })
        .collect();
    let ts = TimeSeries::from_values(values, 1.0).unwrap();
    let file = tmp.path().join("signal.csv");
    ts.write_csv(fs::File::create(&file).unwrap()).unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!(r#"{{"signal": {{"file": {:?}}}}}"#, file.to_str().unwrap()),
    );

    let out = tmp.path().join("out");
    ok(histolab(
        &["sweep", "--policy", "auto", "--config", cfg.to_str().unwrap()],
        &out,
    ));
    let s = json(&out.join("suggestion.json"));
    assert_eq!(s["policy"], "conservative");
    assert!((s["threshold"].as_f64().unwrap() - 0.713).abs() < 1e-9, "{s}");
    assert!((s["ratio"].as_f64().unwrap() - 7.13 / 22.22).abs() < 1e-9);
    assert_eq!(read_csv(&out.join("sweep.csv")).len(), 1);
    let meta = json(&out.join("compressed.json"));
    assert_eq!(meta["policy"], "conservative");
    assert_eq!(meta["original_len"], 1000);
}

#[test]
fn sweep_without_thresholds_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&histolab(&["sweep"], tmp.path())), 64);
}

#[test]
fn auto_on_flat_signal_is_degenerate() {
    let tmp = TempDir::new().unwrap();
    let file = tmp.path().join("flat.csv");
    TimeSeries::from_values(vec![5.0; 100], 1.0)
        .unwrap()
        .write_csv(fs::File::create(&file).unwrap())
        .unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!(r#"{{"signal": {{"file": {:?}}}}}"#, file.to_str().unwrap()),
    );
    let o = histolab(
        &["sweep", "--policy", "auto", "--config", cfg.to_str().unwrap()],
        &tmp.path().join("out"),
    );
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("degenerate"));
}

#[test]
fn usage_and_input_errors() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(code(&histolab(&["--bogus"], &out)), 64);
    assert_eq!(code(&histolab(&[], &out)), 64);
    assert_eq!(
        code(&histolab(&["sweep", "--thresholds", "0.1", "--policy", "auto"], &out)),
        64
    );
    assert_eq!(code(&histolab(&["sweep", "--policy", "sideways"], &out)), 64);
    assert_eq!(code(&histolab(&["sweep", "--thresholds", "-1"], &out)), 64);
    assert_eq!(
        code(&histolab(&["generate", "--config", "/nonexistent/cfg.json"], &out)),
        66
    );
    let bad = write_config(tmp.path(), "{ not json");
    assert_eq!(
        code(&histolab(&["generate", "--config", bad.to_str().unwrap()], &out)),
        64
    );
    let missing_file = write_config(tmp.path(), r#"{"signal": {"file": "/nonexistent/x.csv"}}"#);
    assert_eq!(
        code(&histolab(
            &["generate", "--config", missing_file.to_str().unwrap()],
            &out
        )),
        66
    );
    assert_eq!(code(&histolab(&["--help"], &out)), 0);
}

#[test]
fn out_dir_from_environment() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("env-out");
    let o = Command::new(env!("CARGO_BIN_EXE_histolab"))
        .arg("generate")
        .env("HISTOLAB_OUT", &out)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(out.join("signal.csv").is_file());
}

#[test]
fn anomaly_curve_rows() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"signal": {"preset": "flat"}, "seed": 5, "anomaly": {"count": 8, "amplitude_sigma": 5.0, "width": 1}}"#,
    );
    let out = tmp.path().join("out");
    ok(histolab(
        &[
            "anomaly",
            "--config",
            cfg.to_str().unwrap(),
            "--thresholds",
            "0,0.05,0.3",
        ],
        &out,
    ));
    let rows = read_csv(&out.join("recall_curve.csv"));
    assert_eq!(rows.len(), 3);

    let base = generate(&SignalSpec::flat(1000, 10.0, 0.1, 5)).unwrap();
    let (ts, labels) = inject_anomalies(&base, 8, 5.0, 1, 5u64.wrapping_mul(7919)).unwrap();
    let (recall, _) = score_raw(&ts, &labels, &DetectionParams::default()).unwrap();
    assert_eq!(column(&rows, 2)[0], recall);
    assert_eq!(read_csv(&out.join("anomaly_labels.csv")).len(), 8);

    // Default ladder: lossless then the three policies, recall non-increasing.
    let out2 = tmp.path().join("ladder");
    ok(histolab(&["anomaly", "--config", cfg.to_str().unwrap()], &out2));
    let recall = column(&read_csv(&out2.join("recall_curve.csv")), 2);
    assert_eq!(recall.len(), 4);
    assert!(recall.windows(2).all(|w| w[1] <= w[0]), "{recall:?}");
}

#[test]
fn no_anomalies_means_vacuous_recall() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), r#"{"anomaly": {"count": 0}}"#);
    let out = tmp.path().join("out");
    ok(histolab(
        &["anomaly", "--config", cfg.to_str().unwrap(), "--thresholds", "0,0.5,1"],
        &out,
    ));
    assert!(column(&read_csv(&out.join("recall_curve.csv")), 2)
        .iter()
        .all(|&r| r == 1.0));
}

#[test]
fn lossless_models_show_no_improvement() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"model_deviation": 0, "models": ["AR(2)", "LagLinear(2)", "MA(1)"]}"#,
    );
    let out = tmp.path().join("out");
    ok(histolab(&["models", "--config", cfg.to_str().unwrap()], &out));
    let imp = read_csv(&out.join("improvements.csv"));
    assert_eq!(imp.len(), 3);
    for row in &imp {
        assert_eq!((row[1].as_str(), row[2].as_str(), row[3].as_str()), ("0", "0", "ok"));
    }
    let raw = read_csv(&out.join("models_raw.csv"));
    assert_eq!(raw[0][2..], raw[1][2..], "AR(2) and LagLinear(2) must agree");
    assert_eq!(read_csv(&out.join("models_compressed.csv")).len(), 3);
}

#[test]
fn failed_fits_become_error_rows() {
    // A constant signal: lag regressions are singular, the MA fit is mean-only.
    let tmp = TempDir::new().unwrap();
    let file = tmp.path().join("flat.csv");
    TimeSeries::from_values(vec![2.5; 200], 1.0)
        .unwrap()
        .write_csv(fs::File::create(&file).unwrap())
        .unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!(
            r#"{{"signal": {{"file": {:?}}}, "model_deviation": 0.1, "models": ["AR(1)", "MA(1)"]}}"#,
            file
        ),
    );
    let out = tmp.path().join("out");
    let o = histolab(&["models", "--config", cfg.to_str().unwrap()], &out);
    let rows = read_csv(&out.join("improvements.csv"));
    let status: Vec<&str> = rows.iter().map(|r| r[3].as_str()).collect();
    if status.contains(&"ok") {
        assert_eq!(code(&o), 0);
    } else {
        assert_eq!(code(&o), 2);
    }
    assert_eq!(status[0], "error");

    let cfg = write_config(
        tmp.path(),
        &format!(
            r#"{{"signal": {{"file": {:?}}}, "model_deviation": 0.1, "models": ["AR(1)", "AR(2)"]}}"#,
            file
        ),
    );
    assert_eq!(code(&histolab(&["models", "--config", cfg.to_str().unwrap()], &out)), 2);
}

fn pipeline(out: &Path) {
    for step in ["generate", "sweep", "anomaly", "models"] {
        let mut args = vec![step, "--seed", "9"];
        if step == "sweep" {
            args.extend(["--thresholds", "0.2,0.5,1.0"]);
        }
        ok(histolab(&args, out));
    }
    ok(histolab(&["report", "--seed", "9"], out));
}

#[test]
fn report_manifest() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    pipeline(&a);
    pipeline(&b);
    let mut ma = json(&a.join("manifest.json"));
    let mut mb = json(&b.join("manifest.json"));
    let files: Vec<&str> = ma["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["path"].as_str().unwrap())
        .collect();
    for f in [
        "signal.csv",
        "stats.json",
        "sweep.csv",
        "sweep.svg",
        "recall_curve.csv",
        "recall_curve.svg",
        "models_raw.csv",
        "models_compressed.csv",
        "improvements.csv",
    ] {
        assert!(files.contains(&f), "{f} missing from {files:?}");
        assert!(a.join(f).is_file());
    }
    let steps: Vec<&str> = ma["timings_s"]
        .as_object()
        .unwrap()
        .keys()
        .map(String::as_str)
        .collect();
    assert_eq!(steps, ["anomaly", "generate", "models", "sweep"]);
    assert_eq!(ma["config"]["seed"], 9);
    ma["timings_s"].take();
    mb["timings_s"].take();
    ma["config"]["output_dir"].take();
    mb["config"]["output_dir"].take();
    assert_eq!(ma, mb);
}

#[test]
fn report_requires_prior_outputs() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    pipeline(&out);
    fs::remove_file(out.join("sweep.csv")).unwrap();
    let o = histolab(&["report"], &out);
    assert_eq!(code(&o), 66);
    assert!(String::from_utf8_lossy(&o.stderr).contains("sweep.csv"));
    assert_eq!(code(&histolab(&["report"], &tmp.path().join("empty"))), 66);
}

fn assert_svg(path: &Path, polylines: usize) {
    let text = fs::read_to_string(path).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    let count = doc.descendants().filter(|n| n.has_tag_name("polyline")).count();
    assert_eq!(count, polylines, "{}", path.display());
    assert!(doc.descendants().any(|n| n.has_tag_name("text")), "no labels");
}

#[test]
fn corpus_outputs() {
    let tmp = TempDir::new().unwrap();
    let (seq, par) = (tmp.path().join("seq"), tmp.path().join("par"));
    ok(histolab(&["--corpus", "--seed", "42"], &seq));
    ok(histolab(&["--corpus", "--seed", "42", "--parallel"], &par));
    assert_svg(&seq.join("sweep.svg"), 2);
    assert_svg(&seq.join("recall_curve.svg"), 2);
    for f in [
        "sweep.csv",
        "recall_curve.csv",
        "signal_types.csv",
        "policies.csv",
        "vibration/improvements.csv",
    ] {
        assert_eq!(fs::read(seq.join(f)).unwrap(), fs::read(par.join(f)).unwrap(), "{f}");
    }
    let types = read_csv(&seq.join("signal_types.csv"));
    let policies: Vec<&str> = types.iter().map(|r| r[4].as_str()).collect();
    assert_eq!(policies, ["moderate", "conservative", "conservative"]);
    assert_eq!(read_csv(&seq.join("sweep.csv")).len(), 7);
    assert_eq!(json(&seq.join("manifest.json"))["config"]["corpus"], true);
    assert_eq!(code(&histolab(&["--corpus", "sweep"], &seq)), 64);
}
