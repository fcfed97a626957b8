use std::path::Path;
use std::process::{Command, Output};

use softq::envs::build_gridworld;
use softq::harness::{read_curve_csv, CURVE_HEADER};
use softq::soft::soft_value_iteration;
use softq::tables::{PolicyTable, QTable, Temperature};

fn softq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_softq"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

const TRAIN: &str = r#"{
    "env": {"kind": "chain", "params": {"length": 5, "gamma": 0.95}},
    "algorithm": {"algorithm_id": "nstep_tree_backup", "alpha": 0.1, "gamma": 0.95, "tau": 0.5, "n": 3},
    "behaviour": {"kind": "uniform"},
    "episodes": 50,
    "max_steps": 500,
    "seed": 7,
    "oracle": true
}"#;

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

// the file format does not record terminal states, so compare values only
fn assert_same_values(got: &QTable, expected: &QTable) {
    assert_eq!(got.num_states(), expected.num_states());
    for (i, (a, b)) in got.values().iter().zip(expected.values()).enumerate() {
        assert_eq!(a.to_bits(), b.to_bits(), "entry {i}: {a} vs {b}");
    }
}

#[test]
fn solve_inline_env_spec() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q.json");
    let spec = r#"{"kind":"gridworld","params":{"width":5,"height":5,"goal":[4,4],"step_reward":-1.0,"gamma":0.95}}"#;
    let res = softq(&["solve", "--env", spec, "--tau", "1", "--out", path(&out)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));

    let mdp = build_gridworld(5, 5, (4, 4), -1.0, 0.95).unwrap();
    let expected = soft_value_iteration(
        &mdp,
        &PolicyTable::uniform_for(&mdp),
        Temperature::new(1.0).unwrap(),
        1e-10,
        1_000_000,
    )
    .unwrap()
    .q;
    assert_same_values(&QTable::load(&out).unwrap(), &expected);
}

#[test]
fn solve_mdp_file_with_gamma_override() {
    let dir = tempfile::tempdir().unwrap();
    let mdp_path = dir.path().join("mdp.json");
    build_gridworld(3, 3, (2, 2), -1.0, 0.95)
        .unwrap()
        .save(&mdp_path)
        .unwrap();
    let out = dir.path().join("q.json");
    let res = softq(&[
        "solve",
        "--env",
        path(&mdp_path),
        "--tau",
        "0.5",
        "--gamma",
        "0.8",
        "--out",
        path(&out),
    ]);
    assert_eq!(code(&res), 0);
    let mdp = build_gridworld(3, 3, (2, 2), -1.0, 0.8).unwrap();
    let expected = soft_value_iteration(
        &mdp,
        &PolicyTable::uniform_for(&mdp),
        Temperature::new(0.5).unwrap(),
        1e-10,
        1_000_000,
    )
    .unwrap()
    .q;
    assert_same_values(&QTable::load(&out).unwrap(), &expected);
}

#[test]
fn train_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, TRAIN).unwrap();
    let mut outputs = Vec::new();
    for run in 0..2 {
        let q = dir.path().join(format!("q{run}.json"));
        let curve = dir.path().join(format!("curve{run}.csv"));
        let res = softq(&[
            "train",
            "--config",
            path(&cfg),
            "--out-q",
            path(&q),
            "--out-curve",
            path(&curve),
        ]);
        assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
        outputs.push((std::fs::read(&q).unwrap(), std::fs::read(&curve).unwrap()));
        let rows = read_curve_csv(&curve).unwrap();
        assert_eq!(rows.len(), 50);
        assert!(rows.iter().all(|r| r.q_error_sup.is_some()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs[0].1.clone()).unwrap();
    assert_eq!(text.lines().next(), Some(CURVE_HEADER));
}

#[test]
fn verify_reports_and_exit_codes() {
    let ok = softq(&["verify", "--suite", "identities"]);
    assert_eq!(code(&ok), 0);
    let report: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(report["suite"], "identities");
    assert_eq!(report["passed"], true);
    assert!(!report["checks"].as_array().unwrap().is_empty());

    let failing = softq(&["verify", "--suite", "treebackup_equiv", "--seed", "3"]);
    assert_eq!(code(&failing), 2);
    let report: serde_json::Value = serde_json::from_slice(&failing.stdout).unwrap();
    assert_eq!(report["passed"], false);

    assert_eq!(code(&softq(&["verify", "--suite", "nonsense"])), 1);
}

#[test]
fn validation_and_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, TRAIN.replace("\"seed\"", "\"sede\"")).unwrap();
    let q = dir.path().join("q.json");
    let curve = dir.path().join("c.csv");
    let res = softq(&[
        "train",
        "--config",
        path(&cfg),
        "--out-q",
        path(&q),
        "--out-curve",
        path(&curve),
    ]);
    assert_eq!(code(&res), 1);

    std::fs::write(&cfg, TRAIN.replace("\"alpha\": 0.1", "\"alpha\": -1")).unwrap();
    let res = softq(&[
        "train",
        "--config",
        path(&cfg),
        "--out-q",
        path(&q),
        "--out-curve",
        path(&curve),
    ]);
    assert_eq!(code(&res), 1);
    assert!(String::from_utf8_lossy(&res.stderr).contains("alpha"));

    let missing = dir.path().join("missing.json");
    let res = softq(&[
        "train",
        "--config",
        path(&missing),
        "--out-q",
        path(&q),
        "--out-curve",
        path(&curve),
    ]);
    assert_eq!(code(&res), 3);

    assert_eq!(code(&softq(&["solve", "--tau", "1"])), 1);
    assert_eq!(code(&softq(&["--help"])), 0);
}

#[test]
fn sweep_writes_every_seed() {
    let dir = tempfile::tempdir().unwrap();
    let configs = dir.path().join("configs");
    std::fs::create_dir(&configs).unwrap();
    std::fs::write(configs.join("chain.json"), TRAIN).unwrap();
    let out = dir.path().join("out");
    let res = softq(&[
        "sweep",
        "--config-dir",
        path(&configs),
        "--seeds",
        "3",
        "--out-dir",
        path(&out),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    for seed in 7..10 {
        assert!(out.join(format!("chain_seed{seed}.csv")).exists());
        assert!(out.join(format!("chain_seed{seed}_q.json")).exists());
    }
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.as_array().unwrap().len(), 3);
}
