use std::path::Path;
use std::process::{Command, Output};

use scanfs::params::ParamSet;
use scanfs::report::RunReport;
use scanfs::rl::QNetwork;
use serde_json::Value;

const FAST: &[&str] = &[
    "--set",
    "cae.filters=2,2,2,2,2,1",
    "--set",
    "cae.epochs=1",
    "--set",
    "cae.row_cap=32",
    "--set",
    "dqn.hidden=8",
    "--set",
    "dqn.batch=4",
    "--set",
    "forest.trees=5",
];

fn scanfs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scanfs"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = scanfs(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn synth(dir: &Path) -> String {
    let path = dir.join("data.csv");
    ok(&["synth", "--out", path.to_str().unwrap(), "--samples", "60", "--noise", "3", "--seed", "2"]);
    path.to_str().unwrap().to_string()
}

fn with_fast<'a>(args: &[&'a str]) -> Vec<&'a str> {
    args.iter().copied().chain(FAST.iter().copied()).collect()
}

#[test]
fn select_writes_a_run_directory_and_eval_reads_it() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path());
    let run = tmp.path().join("run");
    let run_s = run.to_str().unwrap();
    ok(&with_fast(&["select", "--data", &data, "--out", run_s, "--episodes", "5", "--seed", "1"]));
    for f in ["config.txt", "report.json", "episodes.csv", "best_mask.json", "checkpoints/cae.json", "checkpoints/policy.json", "checkpoints/target.json"] {
        assert!(run.join(f).is_file(), "missing {f}");
    }
    let report = RunReport::load(&run.join("report.json")).unwrap();
    assert_eq!(report.schema_version, 1);
    assert_eq!(report.episodes.len(), 5);
    assert_eq!(report.config["dqn.episodes"], "5");
    let csv = std::fs::read_to_string(run.join("episodes.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);

    for name in ["policy", "target"] {
        let net = QNetwork::from_params(ParamSet::load(&run.join(format!("checkpoints/{name}.json"))).unwrap()).unwrap();
        assert_eq!(net.input_len(), report.state_len);
    }

    let mask = run.join("best_mask.json");
    let out: Value = serde_json::from_str(&ok(&with_fast(&[
        "eval", "--data", &data, "--seed", "1", "--mask", mask.to_str().unwrap(),
    ])))
    .unwrap();
    let best = report.best.unwrap();
    assert_eq!(out["accuracy"].as_f64().unwrap(), best.accuracy);
    assert!(out["metrics"]["tree"]["f_measure"].is_number());
    assert!(out["metrics"]["forest"]["accuracy"].is_number());
}

#[test]
fn reward_flag_shows_up_in_the_report() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path());
    let run = tmp.path().join("run");
    ok(&with_fast(&[
        "select", "--data", &data, "--out", run.to_str().unwrap(), "--episodes", "2", "--set", "reward.redundancy=off",
    ]));
    let report = RunReport::load(&run.join("report.json")).unwrap();
    assert_eq!(report.config["reward.redundancy"], "off");
    assert!(report.episodes.iter().flat_map(|e| &e.steps).all(|s| s.reward.rd == 0.0));
}

#[test]
fn rank_writes_both_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path());
    let out = tmp.path().join("rank");
    ok(&["rank", "--data", &data, "--out", out.to_str().unwrap()]);
    let ranking = std::fs::read_to_string(out.join("ranking.csv")).unwrap();
    let mut lines = ranking.lines();
    assert_eq!(lines.next().unwrap(), "feature_name,ig_score,rank,redundancy");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    let ranks: Vec<usize> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    let mut sorted = ranks.clone();
    sorted.sort_unstable();
    assert_eq!(sorted, (1..=6).collect::<Vec<_>>());
    let corr = std::fs::read_to_string(out.join("correlation.csv")).unwrap();
    assert_eq!(corr.lines().count(), 7);
}

#[test]
fn baselines_print_subsets() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path());
    for method in ["ig_topk", "mrmr", "sfs"] {
        let out: Value = serde_json::from_str(&ok(&["baseline", "--data", &data, "--method", method, "--k", "2"])).unwrap();
        assert_eq!(out["method"], method);
        assert!(out["indices"].as_array().unwrap().len() <= 2);
    }

    let run = tmp.path().join("run");
    ok(&with_fast(&["select", "--data", &data, "--out", run.to_str().unwrap(), "--episodes", "3"]));
    let report = RunReport::load(&run.join("report.json")).unwrap();
    let k = report.best.unwrap().indices.len();
    let out: Value = serde_json::from_str(&ok(&[
        "baseline", "--data", &data, "--method", "mrmr", "--report", run.join("report.json").to_str().unwrap(),
    ]))
    .unwrap();
    assert_eq!(out["indices"].as_array().unwrap().len(), k);
}

#[test]
fn repro_covers_both_grids() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path());
    let out = tmp.path().join("repro");
    ok(&with_fast(&["repro", "--data", &data, "--out", out.to_str().unwrap(), "--episodes", "2", "--seeds", "0,1"]));
    let text = std::fs::read_to_string(out.join("repro.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 14);
    assert!(text.lines().next().unwrap().starts_with("grid,case,seed,best_accuracy,subset_size"));
}

#[test]
fn bad_input_fails_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path());
    let out = scanfs(&["select", "--data", &data, "--set", "no.such.key=1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no.such.key"));

    let out = scanfs(&["rank", "--data", tmp.path().join("missing.csv").to_str().unwrap()]);
    assert!(!out.status.success());
    let out = scanfs(&["baseline", "--data", &data, "--method", "nope"]);
    assert!(!out.status.success());
}
