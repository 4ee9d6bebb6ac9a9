use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use serde_json::Value;
use spikesel::sim::generate;
use spikesel::SimConfig;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_spikesel"));
    c.env_remove("SPIKE_SELINF_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

/// Data lines of a CSV with provenance comments, split into fields.
fn csv_rows(out: &Output) -> Vec<Vec<String>> {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn example(dir: &TempDir) -> PathBuf {
    write(dir, "example.csv", "fluorescence\n8\n4\n6\n3\n")
}

fn null_trace(dir: &TempDir, t: usize) -> PathBuf {
    let d = generate(&SimConfig { t, seed: 4, ..SimConfig::default() }).unwrap();
    let body: String = d.y.iter().enumerate().map(|(i, v)| format!("{},{v}\n", i + 1)).collect();
    write(dir, "null.csv", &format!("time,fluorescence\n{body}"))
}

#[test]
fn fit_worked_example() {
    let dir = TempDir::new().unwrap();
    let v = json(&run(&["fit", s(&example(&dir)), "--gamma", "0.5", "--lambda", "1"]));
    assert_eq!(v["spikes"], serde_json::json!([2]));
    assert_eq!(v["objective"].as_f64().unwrap(), 1.0);
    assert_eq!(v["provenance"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["provenance"]["args"][0], "fit");
}

#[test]
fn fit_csv_marks_spikes() {
    let dir = TempDir::new().unwrap();
    let out = run(&["fit", s(&example(&dir)), "--gamma", "0.5", "--lambda", "1", "--format", "csv"]);
    let rows = csv_rows(&out);
    assert_eq!(rows[0], ["t", "y", "calcium", "spike"]);
    assert_eq!(rows[2], ["2", "4.0", "4.0", "1"]);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("# spikesel "));
}

#[test]
fn bad_inputs_exit_two() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("empty.csv", "", None),
        ("text.csv", "1.0\n2.0\nabc\n", Some(":3:")),
        ("nan.csv", "1.0\nNaN\n2.0\n", Some(":2:")),
        ("inf.csv", "1.0\ninf\n", Some(":2:")),
        ("order.csv", "1,1.0\n3,2.0\n2,0.5\n", Some(":3:")),
        ("short.csv", "1.0\n", None),
    ];
    for (name, body, needle) in cases {
        let p = write(&dir, name, body);
        let out = run(&["fit", s(&p), "--gamma", "0.9", "--lambda", "1"]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        let err = String::from_utf8_lossy(&out.stderr);
        if let Some(n) = needle {
            assert!(err.contains(n), "{name}: {err}");
        }
    }
    let out = run(&["fit", s(&example(&dir)), "--gamma", "1.5", "--lambda", "1"]);
    assert_eq!(out.status.code(), Some(2));
    // exactly one way of choosing the penalty
    let out = run(&["fit", s(&example(&dir)), "--gamma", "0.5", "--lambda", "1", "--target-spikes", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn presets_set_gamma() {
    let dir = TempDir::new().unwrap();
    let p = example(&dir);
    let v = json(&run(&["fit", s(&p), "--preset", "gcamp6f", "--lambda", "1"]));
    assert_eq!(v["gamma"].as_f64().unwrap(), 0.993);
    let v = json(&run(&["fit", s(&p), "--preset", "gcamp6s", "--lambda", "1"]));
    assert_eq!(v["gamma"].as_f64().unwrap(), 0.98);
}

#[test]
fn target_count_on_null_trace() {
    let dir = TempDir::new().unwrap();
    let p = null_trace(&dir, 5000);
    let v = json(&run(&["fit", s(&p), "--gamma", "0.98", "--target-spikes", "100"]));
    let n = v["spikes"].as_array().unwrap().len();
    assert!(n.abs_diff(100) <= 5, "{n} spikes");
    assert_eq!(v["calibration"]["count"].as_u64().unwrap() as usize, n);
}

#[test]
fn baseline_grid_picks_an_intercept() {
    let dir = TempDir::new().unwrap();
    let d = generate(&SimConfig { t: 600, spike_rate: 0.01, sigma: 0.05, seed: 2, ..SimConfig::default() }).unwrap();
    let body: String = d.y.iter().map(|v| format!("{}\n", v + 1.5)).collect();
    let p = write(&dir, "offset.csv", &body);
    let v = json(&run(&[
        "fit", s(&p), "--gamma", "0.98", "--lambda-grid", "0.05,0.1,0.5", "--beta0-grid", "0:3:0.5",
        "--grid-target", &d.spikes.len().to_string(),
    ]));
    assert_eq!(v["beta0"].as_f64().unwrap(), 1.5);
}

#[test]
fn infer_worked_example() {
    let dir = TempDir::new().unwrap();
    let p = example(&dir);
    let v = json(&run(&["infer", s(&p), "--gamma", "0.5", "--lambda", "1", "--h", "1", "--sigma", "1", "--emit-s-set"]));
    let spike = &v["spikes"][0];
    assert_eq!(spike["tau"], 2);
    assert_eq!(spike["phi_obs"].as_f64().unwrap(), 4.0);
    let set = spike["s_set"].as_array().unwrap();
    assert_eq!(set.len(), 2);
    assert!(set[0][0].is_null() && set[1][1].is_null());
    assert!((set[0][1].as_f64().unwrap() + 1.581).abs() < 1e-3);
    assert!((set[1][0].as_f64().unwrap() - 0.837).abs() < 1e-3);
    assert_eq!(v["sigma_source"], "supplied");
    assert_eq!(v["trace_id"], "example");
    // the set is only written on request
    let v = json(&run(&["infer", s(&p), "--gamma", "0.5", "--lambda", "1", "--h", "1", "--sigma", "1"]));
    assert!(v["spikes"][0].get("s_set").is_none());
}

#[test]
fn infer_defaults_and_determinism() {
    let dir = TempDir::new().unwrap();
    let d = generate(&SimConfig { t: 1500, spike_rate: 0.01, seed: 8, ..SimConfig::default() }).unwrap();
    let body: String = d.y.iter().map(|v| format!("{v}\n")).collect();
    let p = write(&dir, "trace.csv", &body);
    let args = ["infer", s(&p), "--gamma", "0.98", "--target-spikes", "15", "--emit-s-set"];
    let a = run(&args);
    let v = json(&a);
    assert_eq!(v["h"], 20);
    assert_eq!(v["alpha"].as_f64().unwrap(), 0.05);
    assert_eq!(v["sigma_source"], "estimated");
    assert!(!v["spikes"].as_array().unwrap().is_empty());
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout, "rerun differs");
    // thread count changes nothing but the recorded arguments
    let mut with_threads = vec!["--threads", "1"];
    with_threads.extend_from_slice(&args);
    let c = json(&run(&with_threads));
    assert_eq!(c["spikes"], v["spikes"]);
}

#[test]
fn infer_csv_output() {
    let dir = TempDir::new().unwrap();
    let p = example(&dir);
    let out_path = dir.path().join("out.csv");
    let out = run(&[
        "infer", s(&p), "--gamma", "0.5", "--lambda", "1", "--h", "1", "--sigma", "1", "--emit-s-set",
        "--format", "csv", "-o", s(&out_path),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert!(lines.next().unwrap().starts_with("tau,phi_obs,p_selective"));
    let row = lines.next().unwrap();
    assert!(row.starts_with("2,4.0,"));
    assert!(row.contains(":-1.58113883") && row.contains(";0.83724"), "{row}");
}

#[test]
fn simulate_type1_is_quick_and_reproducible() {
    let args = ["simulate", "type1", "--reps", "5", "--t", "500", "--seed", "3"];
    let start = Instant::now();
    let a = run(&args);
    assert!(start.elapsed() < Duration::from_secs(60));
    let rows = csv_rows(&a);
    assert_eq!(rows[0], ["method", "h", "sigma", "metric", "value"]);
    assert_eq!(rows.len(), 1 + 2 * 2 * 4);
    assert_eq!(a.stdout, run(&args).stdout);
    // the environment variable supplies the seed
    let env = bin()
        .args(["simulate", "type1", "--reps", "5", "--t", "500"])
        .env("SPIKE_SELINF_SEED", "3")
        .output()
        .unwrap();
    assert_eq!(csv_rows(&env), rows);
}

#[test]
fn simulate_power_covers_every_cell() {
    let rows = csv_rows(&run(&["simulate", "power", "--reps", "2", "--t", "400", "--sigma", "1..3", "--h", "1,5"]));
    for sigma in ["1.0", "2.0", "3.0"] {
        for h in ["1", "5"] {
            for metric in ["conditional_power", "detection_probability"] {
                assert!(
                    rows.iter().any(|r| r[1] == h && r[2] == sigma && r[3] == metric),
                    "missing σ={sigma} h={h} {metric}"
                );
            }
        }
    }
}

#[test]
fn simulate_ci_rows() {
    let rows = csv_rows(&run(&["simulate", "ci", "--reps", "2", "--t", "400", "--h", "5"]));
    for method in ["selective", "naive"] {
        for metric in ["coverage", "width", "midpoint"] {
            assert!(rows.iter().any(|r| r[0] == method && r[3] == metric));
        }
    }
}

#[test]
fn evaluate_identical_files() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "a.csv", "time,p_value\n10,0.01\n50,0.2\n90,0.03\n130,0.01\n");
    let rows = csv_rows(&run(&["evaluate", "--estimated", s(&p), "--truth", s(&p), "--reps", "50"]));
    let get = |subset: &str, metric: &str| -> f64 {
        rows.iter().find(|r| r[0] == subset && r[1] == metric).unwrap()[2].parse().unwrap()
    };
    assert_eq!(get("all", "victor_purpura"), 0.0);
    assert_eq!(get("all", "correlation"), 1.0);
    assert_eq!(get("selected", "count"), 3.0);
}

#[test]
fn evaluate_subset_beats_full_set() {
    let dir = TempDir::new().unwrap();
    let truth: Vec<usize> = (0..30).map(|i| 40 + 100 * i).collect();
    let mut est = String::from("time,p_value\n");
    for (i, t) in truth.iter().enumerate() {
        est.push_str(&format!("{t},0.001\n"));
        est.push_str(&format!("{},0.{}\n", t + 37 + i % 5, 5 + i % 4));
    }
    let tr: String = truth.iter().map(|t| format!("{t}\n")).collect();
    let e = write(&dir, "est.csv", &est);
    let t = write(&dir, "truth.csv", &tr);
    let rows = csv_rows(&run(&["evaluate", "--estimated", s(&e), "--truth", s(&t), "--reps", "200"]));
    let get = |subset: &str, metric: &str| -> f64 {
        rows.iter().find(|r| r[0] == subset && r[1] == metric).unwrap()[2].parse().unwrap()
    };
    assert!(get("selected", "victor_purpura") < get("all", "victor_purpura"));
    assert!(get("selected", "correlation") > get("all", "correlation"));
    assert!(get("selected", "victor_purpura") < get("resampled", "victor_purpura_q025"));
    assert!(get("selected", "correlation") > get("resampled", "correlation_q975"));
}

#[test]
fn evaluate_default_cost_and_missing_pvalues() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.csv", "10\n");
    let b = write(&dir, "b.csv", "15\n");
    // 5 samples at 100 Hz shifted at cost 10 per second
    let rows = csv_rows(&run(&["evaluate", "--estimated", s(&a), "--truth", s(&b), "--all-only"]));
    let vp: f64 = rows.iter().find(|r| r[1] == "victor_purpura").unwrap()[2].parse().unwrap();
    assert!((vp - 0.5).abs() < 1e-12);
    let out = run(&["evaluate", "--estimated", s(&a), "--truth", s(&b)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn calibrate_reports_lambda() {
    let dir = TempDir::new().unwrap();
    let p = null_trace(&dir, 2000);
    let v = json(&run(&["calibrate", s(&p), "--gamma", "0.98", "--target-spikes", "20"]));
    assert!(v["lambda"].as_f64().unwrap() > 0.0);
    assert!(v["count"].as_u64().unwrap().abs_diff(20) <= 1);
}
