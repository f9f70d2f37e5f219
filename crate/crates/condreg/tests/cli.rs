//! End-to-end checks of the command-line interface: exit codes, report
//! shape, evaluation round trips, and determinism.

use std::path::Path;
use std::process::{Command, Output};

fn condreg(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_condreg"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn synth_fit_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = condreg(
        &[
            "synth",
            "line-uniform",
            "--out",
            "data.csv",
            "--spec-out",
            "planted.json",
            "--n",
            "4",
            "--n-points",
            "300",
            "--mu",
            "0.5",
            "--w-star",
            "2.0",
            "--noise-sigma",
            "0.5",
            "--seed",
            "7",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "synth failed: {}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("data.csv").exists());
    let planted = json(&dir.path().join("planted.json"));
    assert_eq!(planted["family"], "line_uniform");
    assert!(planted["planted"]["dnf_star"].is_array());

    let out = condreg(
        &[
            "fit",
            "data.csv",
            "--mu",
            "0.5",
            "--r-init",
            "8.0",
            "--r-final",
            "0.1",
            "--cq",
            "2",
            "--seed",
            "11",
            "--out",
            "report.json",
            "--verbose",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "fit failed: {}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["schema_version"], 1);
    assert!(report["selected"]["coverage"].as_f64().unwrap() >= 0.45);
    // Trace sidecar written in verbose mode.
    let sidecar = std::fs::read_to_string(dir.path().join("report.trace.jsonl")).unwrap();
    assert!(sidecar.lines().count() >= 1);
    for line in sidecar.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["kind"].is_string());
    }

    // Evaluating on the training data reproduces the report numbers exactly.
    let out = condreg(&["eval", "data.csv", "report.json"], dir.path());
    assert!(out.status.success(), "eval failed: {}", String::from_utf8_lossy(&out.stderr));
    let eval: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(eval["coverage"], report["selected"]["coverage"]);
    assert_eq!(eval["cond_loss"], report["selected"]["cond_loss"]);

    // Held-out data from the same planted condition: coverage stays within
    // sampling distance of mu.
    std::fs::write(
        dir.path().join("dnf.json"),
        serde_json::to_string(&planted["planted"]["dnf_star"]).unwrap(),
    )
    .unwrap();
    let out = condreg(
        &[
            "synth",
            "line-uniform",
            "--out",
            "holdout.csv",
            "--dnf-json",
            "dnf.json",
            "--n",
            "4",
            "--n-points",
            "2000",
            "--mu",
            "0.5",
            "--w-star",
            "2.0",
            "--noise-sigma",
            "0.5",
            "--seed",
            "8",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let out = condreg(&["eval", "holdout.csv", "report.json"], dir.path());
    assert!(out.status.success(), "holdout eval failed: {}", String::from_utf8_lossy(&out.stderr));
    let eval: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let cov = eval["coverage"].as_f64().unwrap();
    assert!((cov - 0.5).abs() < 0.03, "holdout coverage {cov}");
}

#[test]
fn fit_is_deterministic_apart_from_timing() {
    let dir = tempfile::tempdir().unwrap();
    let out = condreg(
        &["synth", "line-uniform", "--out", "d.csv", "--n", "4", "--n-points", "200", "--mu", "0.5", "--w-star", "1.0", "--noise-sigma", "0.3", "--seed", "3"],
        dir.path(),
    );
    assert!(out.status.success());
    for name in ["a.json", "b.json"] {
        let out = condreg(
            &["fit", "d.csv", "--mu", "0.5", "--r-init", "6", "--r-final", "0.1", "--cq", "1", "--seed", "5", "--out", name],
            dir.path(),
        );
        assert!(out.status.success());
    }
    let mut a = json(&dir.path().join("a.json"));
    let mut b = json(&dir.path().join("b.json"));
    a["timing"] = serde_json::Value::Null;
    b["timing"] = serde_json::Value::Null;
    assert_eq!(a, b);
}

#[test]
fn invalid_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = condreg(
        &["synth", "sine", "--out", "s.csv", "--n-points", "50", "--noise-sigma", "0.1", "--seed", "1"],
        dir.path(),
    );
    assert!(out.status.success());
    let out = condreg(&["fit", "s.csv", "--r-init", "0.5", "--r-final", "1.0"], dir.path());
    assert_eq!(out.status.code(), Some(1), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn parse_error_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "x_1,y_1,z\n2,0.5,1\n").unwrap();
    let out = condreg(&["fit", "bad.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 1"));
}

#[test]
fn selection_failure_exits_two_with_report() {
    let dir = tempfile::tempdir().unwrap();
    // Four points whose per-term fits are mutually far apart: no parameter
    // ball can gather the weight a full-coverage condition needs, so the
    // candidate list is empty and selection must fail.
    std::fs::write(
        dir.path().join("spread.csv"),
        "x_1,x_2,y_1,z
1,0,1,100
0,1,1,-100
1,1,1,30
0,0,1,-30
",
    )
    .unwrap();
    let out = condreg(
        &[
            "fit", "spread.csv", "--mu", "1.0", "--r-init", "200", "--r-final", "0.05", "--cq",
            "1", "--s0", "0.000001", "--out", "r.json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("r.json"));
    assert!(report["selection_error"].is_string());
    assert!(report["selected"].is_null());
}

#[test]
fn eval_rejects_attribute_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let out = condreg(
        &["synth", "line-uniform", "--out", "d.csv", "--n", "4", "--n-points", "200", "--mu", "0.5", "--w-star", "1.0", "--noise-sigma", "0.2", "--seed", "3"],
        dir.path(),
    );
    assert!(out.status.success());
    let out = condreg(
        &["fit", "d.csv", "--mu", "0.5", "--r-init", "6", "--r-final", "0.1", "--cq", "1", "--out", "r.json"],
        dir.path(),
    );
    assert!(out.status.success());
    // A dataset with fewer Boolean attributes cannot host the fitted DNF.
    let out = condreg(
        &["synth", "sine", "--out", "other.csv", "--n-points", "50", "--noise-sigma", "0.1", "--seed", "1"],
        dir.path(),
    );
    assert!(out.status.success());
    let out = condreg(&["eval", "other.csv", "r.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn synth_config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("synth.json"),
        r#"{"n": 4, "n_points": 120, "mu": 0.5, "w_star": 1.5, "noise_sigma": 0.1, "seed": 9}"#,
    )
    .unwrap();
    let out = condreg(
        &["synth", "line-uniform", "--config", "synth.json", "--out", "a.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // Overriding the seed changes the data; same config reproduces it.
    let out = condreg(
        &["synth", "line-uniform", "--config", "synth.json", "--out", "b.csv"],
        dir.path(),
    );
    assert!(out.status.success());
    let a = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    let out = condreg(
        &["synth", "line-uniform", "--config", "synth.json", "--seed", "10", "--out", "c.csv"],
        dir.path(),
    );
    assert!(out.status.success());
    let c = std::fs::read_to_string(dir.path().join("c.csv")).unwrap();
    assert_ne!(a, c);
}
