use std::path::{Path, PathBuf};

use shaml::cli::{cli_dispatch, EXIT_FAILURE, EXIT_OK, EXIT_USAGE};
use shaml::experiments::RunManifest;

fn data(name: &str) -> String {
    format!("{}/../../data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> i32 {
    cli_dispatch(std::iter::once("shaml").chain(args.iter().copied()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small synthetic 4-vs-9 config with short MLP training.
fn synthetic_config(dir: &Path) -> PathBuf {
    let cfg = serde_json::json!({
        "name": "cli_synthetic",
        "dataset": {"kind": "synthetic", "n": 300, "classes": "4:1,9:1", "seed": 3},
        "filter": {"sha_in": [4, 9]},
        "train": {"seed": 9, "mlp": {"epochs": 3, "hidden": [8]}, "gbm": {"n_trees": 10}},
        "output_dir": s(&dir.join("unused")),
    });
    let p = dir.join("cfg.json");
    std::fs::write(&p, cfg.to_string()).unwrap();
    p
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["--no-such-flag", "validate"]), EXIT_USAGE);
    assert_eq!(run(&[]), EXIT_USAGE);
    assert_eq!(run(&["ablate"]), EXIT_USAGE);
    assert_eq!(run(&["ablate", "--config", "/nonexistent/cfg.json"]), EXIT_USAGE);
    assert_eq!(run(&["--help"]), EXIT_OK);
}

#[test]
fn validate_reports_pass_rate() {
    assert_eq!(run(&["validate", "--in", &data("lmfdb_sample_4_9.csv"), "--tol", "1e-4"]), EXIT_OK);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    let mut text = std::fs::read_to_string(data("lmfdb_sample_regression.csv")).unwrap();
    text = text.lines().take(4).collect::<Vec<_>>().join("\n");
    // Break the BSD identity on the last row by doubling its sha_order.
    let (head, last) = text.rsplit_once('\n').unwrap();
    let (fields, sha) = last.rsplit_once(',').unwrap();
    let doubled = sha.parse::<u64>().unwrap() * 4;
    std::fs::write(&bad, format!("{head}\n{fields},{doubled}\n")).unwrap();
    assert_eq!(run(&["validate", "--in", s(&bad)]), EXIT_FAILURE);
}

#[test]
fn ablate_writes_full_grid_under_out() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synthetic_config(dir.path());
    let out = dir.path().join("run");
    assert_eq!(run(&["ablate", "--config", s(&cfg), "--out", s(&out)]), EXIT_OK);
    let csv = std::fs::read_to_string(out.join("results/ablation.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 36);
    let svg = std::fs::read_to_string(out.join("figures/ablation.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(out.join("manifests/ablate.json").exists());
    assert!(!dir.path().join("unused").exists());
    let mut entries: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    entries.sort();
    assert_eq!(entries, ["figures", "manifests", "results"]);
}

#[test]
fn manifest_rerun_reproduces_metrics_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synthetic_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(run(&["benchmark", "--config", s(&cfg), "--out", s(&a), "--threads", "1"]), EXIT_OK);
    let first = RunManifest::load(a.join("manifests/benchmark.json")).unwrap();
    assert_eq!(first.threads, 1);
    let manifest = a.join("manifests/benchmark.json");
    assert_eq!(run(&["benchmark", "--config", s(&manifest), "--out", s(&b), "--threads", "3"]), EXIT_OK);
    let second = RunManifest::load(b.join("manifests/benchmark.json")).unwrap();
    assert_eq!(first.metrics, second.metrics);
    assert_eq!(first.dataset, second.dataset);
    assert_eq!(first.seed, second.seed);
}

#[test]
fn delaunay_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    assert_eq!(run(&["delaunay", "--in", &data("lmfdb_sample_regression.csv"), "--out", s(&out)]), EXIT_OK);
    let table = std::fs::read_to_string(out.join("results/delaunay_table.csv")).unwrap();
    assert_eq!(table.lines().count(), 7);
    assert!(table.contains("0.022924"));
    assert_eq!(run(&["report", "--out", s(&out)]), EXIT_OK);
    let summary = std::fs::read_to_string(out.join("results/summary.csv")).unwrap();
    assert!(summary.lines().any(|l| l.starts_with("delaunay,")));
}

#[test]
fn synth_then_ingest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    assert_eq!(run(&["synth", "--rows", "50", "--classes", "1:1,4:1", "--seed", "2", "--out", s(&out)]), EXIT_OK);
    let csv = out.join("results/synthetic.csv");
    assert_eq!(run(&["validate", "--in", s(&csv), "--tol", "1e-10"]), EXIT_OK);
    let out2 = dir.path().join("i");
    assert_eq!(run(&["ingest", "--in", s(&csv), "--out", s(&out2)]), EXIT_OK);
    let m = RunManifest::load(out2.join("manifests/ingest.json")).unwrap();
    assert_eq!(m.dataset.rows, 50);
    assert_eq!(run(&["synth", "--classes", "3:1", "--out", s(&out)]), EXIT_FAILURE);
}

#[test]
fn api_dataset_requires_download_flag() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("api.json");
    std::fs::write(
        &p,
        r#"{"name": "api", "dataset": {"kind": "api", "query": {"rank": 0}, "limit": 10}}"#,
    )
    .unwrap();
    assert_eq!(run(&["ingest", "--config", s(&p), "--out", s(&dir.path().join("o"))]), EXIT_USAGE);
}
