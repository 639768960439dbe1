use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn otl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_otl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = otl(args);
    assert!(
        out.status.success(),
        "otl {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn without_wall_times(mut v: Value) -> Value {
    match &mut v {
        Value::Object(map) => {
            map.retain(|k, _| !k.starts_with("wall_ms"));
            for x in map.values_mut() {
                *x = without_wall_times(x.take());
            }
        }
        Value::Array(items) => {
            for x in items.iter_mut() {
                *x = without_wall_times(x.take());
            }
        }
        _ => {}
    }
    v
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn balance_writes_artifacts_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&[
            "balance",
            "--n",
            "3000",
            "--k",
            "32",
            "--seed",
            "4",
            "--out",
            s(out),
        ]);
    }
    for file in ["labels.csv", "trace.csv"] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
    let summary = json(&a.join("summary.json"));
    assert_eq!(
        without_wall_times(summary.clone()),
        without_wall_times(json(&b.join("summary.json")))
    );
    assert_eq!(summary["n"], 3000);
    assert_eq!(summary["k"], 32);
    assert_eq!(summary["beta"], 1.5);
    assert_eq!(summary["alpha0"], 1e-15);
    assert!(summary["final_std"].as_f64().unwrap() <= 2.0);
    assert!(summary["wall_ms"].as_f64().unwrap() >= 0.0);

    let labels = fs::read_to_string(a.join("labels.csv")).unwrap();
    assert!(labels.starts_with("sample,label\n0,"));
    assert_eq!(labels.lines().count(), 3001);
    let trace = fs::read_to_string(a.join("trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,alpha,std,accepted\n0,"));
}

#[test]
fn invalid_beta_is_a_validation_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("never");
    let out = otl(&[
        "balance",
        "--n",
        "100",
        "--k",
        "4",
        "--beta",
        "0.9",
        "--out",
        s(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("beta must exceed 1"));
    assert!(!out_dir.exists());
}

#[test]
fn missing_input_is_an_io_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.otlm");
    let out = otl(&[
        "balance",
        "--input",
        s(&missing),
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.otlm"));
}

#[test]
fn malformed_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.otlm");
    fs::write(&bad, b"not a matrix file at all").unwrap();
    let out = otl(&[
        "balance",
        "--input",
        s(&bad),
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("offset"));
}

#[test]
fn iteration_cap_has_its_own_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = otl(&[
        "balance",
        "--n",
        "1000",
        "--k",
        "16",
        "--max-iters",
        "1",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("outer iterations"));
}

#[test]
fn generated_files_balance_like_the_generator() {
    let dir = tempfile::tempdir().unwrap();
    let bin_dir = dir.path().join("bin");
    let csv_dir = dir.path().join("csv");
    ok(&[
        "gen",
        "--n",
        "500",
        "--k",
        "8",
        "--seed",
        "3",
        "--out",
        s(&bin_dir),
    ]);
    ok(&[
        "gen",
        "--n",
        "500",
        "--k",
        "8",
        "--seed",
        "3",
        "--csv",
        "--out",
        s(&csv_dir),
    ]);
    let (bin_file, csv_file) = (bin_dir.join("matrix.otlm"), csv_dir.join("matrix.csv"));
    let runs = [
        ("direct", vec!["--n", "500", "--k", "8", "--seed", "3"]),
        ("bin", vec!["--input", s(&bin_file)]),
        ("csv", vec!["--input", s(&csv_file)]),
    ];
    let mut label_files = Vec::new();
    for (name, source) in &runs {
        let out = dir.path().join(format!("run_{name}"));
        let mut args = vec!["balance"];
        args.extend(source.iter().copied());
        args.extend(["--out", s(&out)]);
        ok(&args);
        label_files.push(fs::read(out.join("labels.csv")).unwrap());
    }
    assert_eq!(label_files[0], label_files[1]);
    assert_eq!(label_files[0], label_files[2]);
}

#[test]
fn single_beta_sweep_reproduces_balance() {
    let dir = tempfile::tempdir().unwrap();
    let (single, sweep) = (dir.path().join("single"), dir.path().join("sweep"));
    ok(&[
        "balance",
        "--n",
        "2000",
        "--k",
        "16",
        "--seed",
        "9",
        "--beta",
        "3",
        "--out",
        s(&single),
    ]);
    ok(&[
        "sweep-beta",
        "--n",
        "2000",
        "--k",
        "16",
        "--seed",
        "9",
        "--betas",
        "3",
        "--out",
        s(&sweep),
    ]);
    assert_eq!(
        fs::read(single.join("trace.csv")).unwrap(),
        fs::read(sweep.join("trace_beta_3.csv")).unwrap()
    );
    let summary = json(&sweep.join("summary.json"));
    assert_eq!(
        without_wall_times(summary["runs"][0].clone()),
        without_wall_times(json(&single.join("summary.json")))
    );
    assert!(summary["note"].as_str().unwrap().contains("proxy"));
}

#[test]
fn sweep_k_dedups_and_parallel_matches_sequential() {
    let dir = tempfile::tempdir().unwrap();
    let (seq, par) = (dir.path().join("seq"), dir.path().join("par"));
    let out = ok(&[
        "sweep-k",
        "--n",
        "2000",
        "--ks",
        "8,2,8,16",
        "--out",
        s(&seq),
    ]);
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("warning: ignoring repeated k values [8]")
    );
    ok(&[
        "sweep-k",
        "--n",
        "2000",
        "--ks",
        "8,2,8,16",
        "--jobs",
        "3",
        "--out",
        s(&par),
    ]);
    for k in [2, 8, 16] {
        let name = format!("trace_k_{k}.csv");
        assert_eq!(
            fs::read(seq.join(&name)).unwrap(),
            fs::read(par.join(&name)).unwrap()
        );
    }
    let summary = json(&seq.join("summary.json"));
    let runs = summary["runs"].as_array().unwrap();
    assert_eq!(
        runs.iter()
            .map(|r| r["k"].as_u64().unwrap())
            .collect::<Vec<_>>(),
        vec![8, 2, 16]
    );
    // k = 2 with even n must split exactly
    assert_eq!(runs[1]["final_std"], 0.0);
    assert_eq!(
        without_wall_times(summary),
        without_wall_times(json(&par.join("summary.json")))
    );
}

#[test]
fn compare_writes_one_row_per_k() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "compare",
        "--n",
        "600",
        "--ks",
        "4,6,12",
        "--out",
        s(dir.path()),
    ]);
    let text = fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "n,k,std_otl,std_sk,iters_otl,iters_sk,wall_ms_otl,wall_ms_sk"
    );
    assert_eq!(lines.len(), 4);
    for line in &lines[1..] {
        let std_otl: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        // 600 is divisible by every k here
        assert!(std_otl <= 2.0, "{line}");
    }
    let out = otl(&["compare", "--n", "600", "--ks", "", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn timing_reports_raw_times_and_median() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "timing",
        "--n",
        "1000",
        "--k",
        "8",
        "--repeats",
        "3",
        "--out",
        s(dir.path()),
    ]);
    let report = json(&dir.path().join("timing.json"));
    let times = report["times_ms"].as_array().unwrap();
    assert_eq!(times.len(), 3);
    let mut sorted: Vec<f64> = times.iter().map(|t| t.as_f64().unwrap()).collect();
    sorted.sort_by(f64::total_cmp);
    assert_eq!(report["median_ms"].as_f64().unwrap(), sorted[1]);
    assert_eq!(report["seeds"], serde_json::json!([0, 1, 2]));
    let out = otl(&["timing", "--n", "1000", "--k", "8", "--repeats", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn metrics_from_counts_and_labels() {
    let out = ok(&["metrics", "--counts", "4,0,0,0"]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["n_ind"], "6");
    assert_eq!(report["n_dis"], "0");
    assert_eq!(report["total"], "6");
    assert_eq!(report["std_form_check"], true);
    assert_eq!(report["is_most_discriminative"], false);

    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("labels.csv");
    fs::write(&labels, "sample,label\n0,0\n1,1\n2,2\n3,0\n").unwrap();
    let out = ok(&[
        "metrics",
        "--labels",
        s(&labels),
        "--k",
        "4",
        "--out",
        s(dir.path()),
    ]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["counts"], serde_json::json!([2, 1, 1, 0]));
    assert_eq!(report["n_ind"], "1");
    assert_eq!(json(&dir.path().join("metrics.json")), report);

    let out = otl(&["metrics", "--counts", "3,-1,0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("negative count"));
}

#[test]
fn uneven_targets_land_near_the_power_law() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "uneven",
        "--n",
        "100",
        "--k",
        "4",
        "--xs",
        "1,0",
        "--out",
        s(dir.path()),
    ]);
    let hist = fs::read_to_string(dir.path().join("histogram_x_1.csv")).unwrap();
    let counts: Vec<i64> = hist
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    for (c, t) in counts.iter().zip([10, 20, 30, 40]) {
        assert!((c - t).abs() <= 1, "{counts:?}");
    }
    let target = fs::read_to_string(dir.path().join("target_x_1.csv")).unwrap();
    assert_eq!(target, "cluster,target\n0,10\n1,20\n2,30\n3,40\n");
    let summary = json(&dir.path().join("summary.json"));
    assert_eq!(summary[1]["counts"], serde_json::json!([25, 25, 25, 25]));

    let out = otl(&[
        "uneven",
        "--n",
        "100",
        "--k",
        "4",
        "--xs",
        "-1",
        "--out",
        s(&dir.path().join("neg")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sinkhorn_and_knn_commands_run() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["sinkhorn", "--n", "400", "--k", "8", "--out", s(dir.path())]);
    let summary = json(&dir.path().join("summary.json"));
    assert_eq!(summary["converged"], true);
    assert!(dir.path().join("labels.csv").exists());

    let out = ok(&["knn-eval", "--n", "500", "--dim", "16", "--classes", "3"]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["n_train"], 400);
    assert!(report["accuracy"].as_f64().unwrap() > 0.9);
}

#[test]
fn bad_target_is_rejected_by_the_parser() {
    let out = otl(&["balance", "--n", "10", "--k", "2", "--target", "zipf"]);
    assert_eq!(out.status.code(), Some(2));
}
