use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use spparafac::io::{parse_dataset_csv, read_aggregate_csv, read_histogram_csv, read_json, read_matrix_csv};
use spparafac::simgen::{ScenarioSpec, Truth};
use tempfile::TempDir;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spparafac")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = cli(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_dataset(dir: &Path) -> String {
    let file = dir.join("small.csv");
    let mut text = String::from("a,b,c\n");
    for i in 0..30 {
        text.push_str(&format!("{},{},{}\n", 1 + i % 2, 1 + (i / 2) % 2, 1 + i % 3));
    }
    fs::write(&file, text).unwrap();
    file.to_str().unwrap().to_string()
}

fn line_count(p: &Path) -> usize {
    fs::read_to_string(p).unwrap().lines().count()
}

#[test]
fn simulate_writes_data_and_truth() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sim");
    ok(&["simulate", "--seed", "11", "--out", path(&out)]);
    let parsed = parse_dataset_csv(out.join("data.csv"), None).unwrap();
    assert_eq!((parsed.dataset.n(), parsed.dataset.p()), (100, 100));
    assert!(parsed.dataset.levels().iter().all(|&d| d == 2));

    let regenerated = ScenarioSpec { seed: 11, ..ScenarioSpec::default_loglinear() }.generate().unwrap();
    assert_eq!(parsed.dataset.values(), regenerated.values());

    let truth: Truth = read_json(out.join("truth.json")).unwrap();
    assert_eq!(truth.seed, 11);
    let pairs = truth.cramers_v.as_ref().unwrap();
    assert_eq!(pairs.len(), 6);
    assert!(pairs.iter().all(|p| p.value > 0.0 && p.value < 1.0));
    assert_eq!(truth.coefficient(&[12]), Some(2.0));
}

#[test]
fn fit_respects_chain_flags_and_seed() {
    let dir = TempDir::new().unwrap();
    let data = small_dataset(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        ok(&["fit", "--data", &data, "--iterations", "100", "--burn-in", "50", "--thin", "5", "--seed", "3", "--out", path(out)]);
    }
    assert_eq!(line_count(&a.join("draws.jsonl")), 10);
    assert_eq!(line_count(&a.join("trace.csv")), 11);
    assert_eq!(fs::read(a.join("draws.jsonl")).unwrap(), fs::read(b.join("draws.jsonl")).unwrap());
    let meta: serde_json::Value = read_json(a.join("run_meta.json")).unwrap();
    assert_eq!(meta["seed"], 3);
    assert_eq!(meta["config"]["prior"]["gamma"], 0.2 * 3.0);
}

#[test]
fn fit_defaults_keep_three_thousand_draws() {
    let dir = TempDir::new().unwrap();
    let data = small_dataset(dir.path());
    let out = dir.path().join("run");
    ok(&["fit", "--data", &data, "--out", path(&out)]);
    assert_eq!(line_count(&out.join("draws.jsonl")), 3000);
}

#[test]
fn flags_override_the_config_file() {
    let dir = TempDir::new().unwrap();
    let data = small_dataset(dir.path());
    let out = dir.path().join("run");
    let config = dir.path().join("run.json");
    let text = format!(
        r#"{{"seed": 1, "out": "{}", "fit": {{"data": "{}", "gibbs": {{"iterations": 200, "burn_in": 50, "thin": 5}}}}}}"#,
        path(&out),
        data
    );
    fs::write(&config, text).unwrap();
    ok(&["fit", "--config", path(&config)]);
    assert_eq!(line_count(&out.join("draws.jsonl")), 30);
    ok(&["fit", "--config", path(&config), "--iterations", "100", "--seed", "9"]);
    assert_eq!(line_count(&out.join("draws.jsonl")), 10);
    let echo: serde_json::Value = read_json(out.join("config.json")).unwrap();
    assert_eq!(echo["seed"], 9);
    assert_eq!(echo["fit"]["gibbs"]["iterations"], 100);
}

#[test]
fn summarize_writes_matrices_coefficients_and_histograms() {
    let dir = TempDir::new().unwrap();
    let sim = dir.path().join("sim");
    ok(&["simulate", "--seed", "2", "--p", "20", "--out", path(&sim)]);
    let run = dir.path().join("run");
    let data = sim.join("data.csv");
    ok(&["fit", "--data", path(&data), "--iterations", "300", "--burn-in", "100", "--thin", "2", "--out", path(&run)]);
    ok(&[
        "summarize", "--run", path(&run), "--out", path(&run), "--cramers-v", "--beta", "2,4,12,14", "--cell", "2:1,4:2",
        "--marginal", "12:2",
    ]);

    let (names, values) = read_matrix_csv(run.join("cramers_v_mean.csv")).unwrap();
    let p = names.len();
    assert_eq!(p, 20);
    for a in 0..p {
        assert_eq!(values[a * p + a], 1.0);
        for b in 0..p {
            assert_eq!(values[a * p + b], values[b * p + a]);
        }
    }

    let summary: serde_json::Value = read_json(run.join("summary.json")).unwrap();
    let terms = summary["coefficients"][0]["terms"].as_array().unwrap();
    assert_eq!(terms.len(), 15);
    for t in terms {
        let s = &t["summary"];
        let q = [s["min"].as_f64().unwrap(), s["q025"].as_f64().unwrap(), s["q50"].as_f64().unwrap(), s["q975"].as_f64().unwrap(), s["max"].as_f64().unwrap()];
        assert!(q.windows(2).all(|w| w[0] <= w[1]), "{q:?}");
    }
    assert_eq!(terms[0]["name"], "b2");
    let hist = read_histogram_csv(run.join("histograms").join("b2_4.csv")).unwrap();
    assert_eq!(hist.counts.iter().sum::<u64>(), summary["draws"].as_u64().unwrap());
    assert!(run.join("histograms").join("cell_2-1_4-2.csv").exists());
    assert!(run.join("histograms").join("marginal_12-2.csv").exists());
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = TempDir::new().unwrap();
    let data = small_dataset(dir.path());
    let run = dir.path().join("run");
    ok(&["fit", "--data", &data, "--iterations", "40", "--burn-in", "10", "--thin", "2", "--out", path(&run)]);

    let unknown = cli(&["summarize", "--run", path(&run), "--out", path(&run), "--beta", "1,7"]);
    assert_eq!(unknown.status.code(), Some(2));

    let config = dir.path().join("bad.json");
    fs::write(&config, r#"{"fit": {"iterationz": 5}}"#).unwrap();
    assert_eq!(cli(&["fit", "--config", path(&config), "--data", &data]).status.code(), Some(2));

    assert_eq!(cli(&["fit", "--data", &data, "--iterations", "10", "--burn-in", "10"]).status.code(), Some(2));

    let ragged = dir.path().join("ragged.csv");
    fs::write(&ragged, "a,b\n1,2\n1\n").unwrap();
    let out = cli(&["fit", "--data", path(&ragged), "--out", path(&run)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 3"));

    let zero = dir.path().join("zero.csv");
    fs::write(&zero, "a,b\n1,2\n0,1\n").unwrap();
    assert_eq!(cli(&["fit", "--data", path(&zero), "--out", path(&run)]).status.code(), Some(3));
}

#[test]
fn prior_sim_reports_coefficients_and_norms() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("prior");
    ok(&["prior-sim", "--p", "3", "--draws", "500", "--gamma", "1", "--seed", "5", "--out", path(&out)]);
    let report: serde_json::Value = read_json(out.join("prior_summary.json")).unwrap();
    assert_eq!(report["seed"], 5);
    assert_eq!(report["coefficients"].as_array().unwrap().len(), 7);
    let h = read_histogram_csv(out.join("histograms").join("b1_2_3.csv")).unwrap();
    assert_eq!(h.counts.iter().sum::<u64>(), 500);
    assert!(out.join("histograms").join("main_l1.csv").exists());

    let big = dir.path().join("big");
    ok(&["prior-sim", "--p", "40", "--draws", "200", "--gamma", "0", "--out", path(&big)]);
    let report: serde_json::Value = read_json(big.join("prior_summary.json")).unwrap();
    assert!(report["coefficients"].as_array().unwrap().is_empty());
    assert!(report["main_l1"]["mean"].as_f64().unwrap() > 0.0);
}

#[test]
fn single_replicate_gives_degenerate_rates() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("rep");
    ok(&[
        "replicate", "--replicates", "1", "--p", "60", "--iterations", "200", "--burn-in", "100", "--thin", "2", "--seed", "40",
        "--threads", "2", "--out", path(&out),
    ]);
    let rows = read_aggregate_csv(out.join("aggregate.csv")).unwrap();
    assert_eq!(rows.len(), 30);
    assert!(rows.iter().all(|r| r.replicates == 1));
    assert!(rows.iter().all(|r| r.rejection_rate == 0.0 || r.rejection_rate == 1.0));
    assert!(rows.iter().all(|r| r.coverage == 0.0 || r.coverage == 1.0));
    assert_eq!(rows.iter().filter(|r| !r.is_null()).count(), 11);
    assert!(rows.iter().any(|r| r.name == "b20_30_40_50" && r.is_null()));
    let text = fs::read_to_string(out.join("aggregate.csv")).unwrap();
    assert!(text.contains("type_i") && text.contains("power"));
    assert!(out.join("replicates").join("replicate_0000.json").exists());
    let study: serde_json::Value = read_json(out.join("study.json")).unwrap();
    assert_eq!(study["config"]["base_seed"], 40);
}
