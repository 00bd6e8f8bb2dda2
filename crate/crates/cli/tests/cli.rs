use std::path::Path;
use std::process::Command;

use ctbn_cli::{cli_main, ResultFile};

fn ctbn(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ctbn")).args(args).output().unwrap()
}

fn read_result(path: &Path) -> ResultFile {
    let mut r = ResultFile::from_json(&std::fs::read_to_string(path).unwrap()).unwrap();
    r.metadata.wall_seconds = 0.0;
    r
}

fn rows_normalized(r: &ResultFile) {
    let mut sums = std::collections::BTreeMap::new();
    for row in &r.posterior {
        assert!((0.0..=1.0).contains(&row.posterior_probability));
        *sums.entry((row.node.clone(), row.t.to_bits())).or_insert(0.0) += row.posterior_probability;
    }
    assert!(!sums.is_empty());
    for s in sums.values() {
        assert!((s - 1.0).abs() < 1e-9);
    }
}

#[test]
fn mcmc_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let csv = dir.path().join("a.csv");
    let common = ["--model", "example1", "--iters", "300", "--grid", "11", "--seed", "4"];
    let out = ctbn(&[&common[..], &["--output", a.to_str().unwrap(), "--csv", csv.to_str().unwrap()]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("acceptance"));
    let out = ctbn(&[&common[..], &["--output", b.to_str().unwrap()]].concat());
    assert!(out.status.success());
    let (ra, rb) = (read_result(&a), read_result(&b));
    assert_eq!(ra, rb);
    rows_normalized(&ra);
    assert_eq!(ra.metadata.burn_in, 30);
    assert_eq!(ra.posterior.len(), 11 * 2);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 22);
}

#[test]
fn saved_evidence_reproduces_the_simulated_run() {
    let dir = tempfile::tempdir().unwrap();
    let ev = dir.path().join("ev.json");
    let truth = dir.path().join("truth.json");
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let base = ["--model", "example2", "--iters", "200", "--grid", "6", "--seed", "1"];
    let out = ctbn(&[&base[..], &["--simulate-seed", "8", "--save-evidence", ev.to_str().unwrap(),
        "--save-truth", truth.to_str().unwrap(), "--output", a.to_str().unwrap()]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = ctbn(&[&base[..], &["--evidence", ev.to_str().unwrap(), "--output", b.to_str().unwrap()]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_result(&a).posterior, read_result(&b).posterior);
    assert!(std::fs::read_to_string(&truth).unwrap().contains("\"node\": \"X\""));
}

#[test]
fn baselines_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let lw = dir.path().join("lw.json");
    let oracle = dir.path().join("oracle.json");
    let out = ctbn(&["--model", "example1", "--algorithm", "lw", "--iters", "500", "--grid", "11", "--output", lw.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_result(&lw);
    rows_normalized(&r);
    assert_eq!(r.weights.len(), 10);
    assert!((r.weights[9].cumulative - r.weights.iter().map(|w| w.weight).sum::<f64>()).abs() < 1e-9);
    assert!(r.metadata.ess.unwrap() >= 1.0);
    let out = ctbn(&["--model", "example1", "--algorithm", "oracle", "--grid", "11", "--output", oracle.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    rows_normalized(&read_result(&oracle));
}

#[test]
fn json_goes_to_stdout_without_output() {
    let out = ctbn(&["--model", "example1", "--iters", "50", "--grid", "3"]);
    assert!(out.status.success());
    let r = ResultFile::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(r.metadata.algorithm, "mcmc");
    assert!(String::from_utf8_lossy(&out.stderr).contains("mcmc:"));
}

#[test]
fn input_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ \"schema_version\": 1, \"nodes\": [ }").unwrap();
    for args in [
        vec!["--model", "no/such/model.json"],
        vec!["--model", bad.to_str().unwrap()],
        vec!["--model", "example1", "--moves", "teleport"],
        vec!["--model", "example1", "--moves", "change_time"],
        vec!["--model", "example1", "--iters", "10", "--burnin", "10"],
        vec!["--model", "example1", "--lambda-mult", "0.5"],
        vec!["--model", "example1", "--grid", "1"],
        vec!["--model", "example1", "--iters", "abc"],
    ] {
        let mut argv = vec!["ctbn"];
        argv.extend(&args);
        assert_eq!(cli_main(argv), 1, "{args:?}");
    }
    let out = ctbn(&["--model", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn runtime_errors_exit_with_two() {
    // Y can never jump, but the evidence says it does: every weight is zero.
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("stuck.json");
    let evidence = dir.path().join("ev.json");
    std::fs::write(&model, r#"{
        "schema_version": 1,
        "nodes": [
            {"name": "X", "states": ["a", "b"], "cims": [{"rates": [[-1, 1], [1, -1]]}]},
            {"name": "Y", "states": ["a", "b"], "parents": ["X"], "cims": [
                {"parents": {"X": "a"}, "rates": [[0, 0], [0, 0]]},
                {"parents": {"X": "b"}, "rates": [[0, 0], [0, 0]]}]}
        ]
    }"#).unwrap();
    std::fs::write(&evidence, r#"{"schema_version": 1, "t_min": 0, "t_max": 1,
        "paths": [{"node": "Y", "initial": "a", "jumps": [{"t": 0.5, "state": "b"}]}]}"#).unwrap();
    let (m, e) = (model.to_str().unwrap(), evidence.to_str().unwrap());
    assert_eq!(cli_main(["ctbn", "--model", m, "--evidence", e, "--algorithm", "lw", "--iters", "20"]), 2);
    assert_eq!(cli_main(["ctbn", "--model", m, "--evidence", e, "--iters", "20"]), 2);
    // The oracle detects the zero evidence probability exactly and rejects the input.
    assert_eq!(cli_main(["ctbn", "--model", m, "--evidence", e, "--algorithm", "oracle"]), 1);
}
