use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn gridshield(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridshield"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(out: &Path, seed: &str) -> Output {
    gridshield(&[
        "generate", "--network", s(&fixture("ieee15.json")), "--scenarios", "3", "--horizon", "2",
        "--seed", seed, "--perturb", "0.30", "--out", s(out),
    ])
}

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for (d, seed) in [(&a, "7"), (&b, "7"), (&c, "8")] {
        let out = generate(d, seed);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let read = |d: &Path| fs::read(d.join("scenarios.json")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(a.join("run.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["scenario_count"], 3);
    assert!(manifest["network_digest"].as_str().unwrap().len() == 64);
}

#[test]
fn solve_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    assert_eq!(code(&generate(&run, "3")), 0);
    let scen = run.join("scenarios.json");
    let out = gridshield(&[
        "solve", "--network", s(&fixture("ieee15.json")), "--scenarios", s(&scen), "--gap", "1e-4",
        "--write-model", "--out", s(&run),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["plan.json", "solution.csv", "schedule.csv", "costs.json", "run.json", "model.mps"] {
        assert!(run.join(f).is_file(), "{f} missing");
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(run.join("run.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "Optimal");
    assert_eq!(manifest["solver"], "highs");
    let first = fs::read(run.join("model.mps")).unwrap();

    // Pinned to the plan just produced, the objective comes back unchanged.
    let again = dir.path().join("again");
    let out = gridshield(&[
        "solve", "--network", s(&fixture("ieee15.json")), "--scenarios", s(&scen), "--plan",
        s(&run.join("plan.json")), "--out", s(&again),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let m2: serde_json::Value =
        serde_json::from_slice(&fs::read(again.join("run.json")).unwrap()).unwrap();
    let (o1, o2) = (manifest["objective"].as_f64().unwrap(), m2["objective"].as_f64().unwrap());
    assert!((o1 - o2).abs() <= 2e-4 * o1.abs().max(1.0), "{o1} vs {o2}");

    let third = dir.path().join("third");
    gridshield(&[
        "solve", "--network", s(&fixture("ieee15.json")), "--scenarios", s(&scen), "--write-model",
        "--out", s(&third),
    ]);
    assert_eq!(first, fs::read(third.join("model.mps")).unwrap());
}

#[test]
fn evaluate_baseline_against_itself() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    assert_eq!(code(&generate(&run, "5")), 0);
    let out = gridshield(&[
        "evaluate", "--plan", "baseline", "--network", s(&fixture("ieee15.json")), "--scenarios",
        s(&run.join("scenarios.json")), "--out", s(&run),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(run.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    assert!(run.join("comparison.svg").is_file() && run.join("breakdown.csv").is_file());
    for line in summary.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[1], cols[2], "{line}");
    }
}

#[test]
fn missing_scenario_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = gridshield(&[
        "evaluate", "--plan", "baseline", "--network", s(&fixture("ieee15.json")), "--scenarios",
        s(&dir.path().join("nope.json")), "--out", s(dir.path()),
    ]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("not found"), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&gridshield(&["solve", "--bogus"])), 2);
    assert_eq!(code(&gridshield(&["frobnicate"])), 2);
    assert_eq!(code(&gridshield(&[])), 2);
    let dir = tempfile::tempdir().unwrap();
    let out = gridshield(&[
        "generate", "--network", s(&fixture("ieee15.json")), "--perturb", "1.5", "--out", s(dir.path()),
    ]);
    assert_eq!(code(&out), 2);
    assert_eq!(code(&gridshield(&["--help"])), 0);
}

#[test]
fn invalid_network_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut net: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(fixture("ieee15.json")).unwrap()).unwrap();
    net["buses"][0]["is_substation"] = false.into();
    let path = dir.path().join("bad.json");
    fs::write(&path, net.to_string()).unwrap();
    let out = gridshield(&["validate", "--network", s(&path)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("substation"));
    assert_eq!(code(&gridshield(&["validate", "--network", s(&fixture("ieee15.json"))])), 0);
}

#[test]
fn oracle_fixture_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let out = gridshield(&["oracle", "--fixture", s(&fixture("oracle_two_bus.json")), "--out", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let verdict: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("oracle.json")).unwrap()).unwrap();
    assert_eq!(verdict["agree"], true);
    assert!((verdict["oracle_objective"].as_f64().unwrap() - 3000.0).abs() < 1e-6);
    let out = gridshield(&[
        "oracle", "--fixture", s(&fixture("oracle_two_bus.json")), "--limit", "2", "--out", s(dir.path()),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"seed": 11, "scenarios": 2, "hazard": {"horizon_steps": 3}}"#).unwrap();
    let net = fixture("ieee15.json");
    let run = |extra: &[&str], out: &Path| {
        let mut args = vec!["generate", "--network", s(&net), "--config", s(&cfg), "--out", s(out)];
        args.extend_from_slice(extra);
        assert_eq!(code(&gridshield(&args)), 0);
        let set: serde_json::Value =
            serde_json::from_slice(&fs::read(out.join("scenarios.json")).unwrap()).unwrap();
        set
    };
    let from_file = run(&[], &dir.path().join("a"));
    assert_eq!(from_file["seed"], 11);
    assert_eq!(from_file["scenarios"].as_array().unwrap().len(), 2);
    assert_eq!(from_file["config"]["horizon_steps"], 3);
    let flagged = run(&["--seed", "12", "--scenarios", "4"], &dir.path().join("b"));
    assert_eq!(flagged["seed"], 12);
    assert_eq!(flagged["scenarios"].as_array().unwrap().len(), 4);

    fs::write(&cfg, r#"{"sed": 1}"#).unwrap();
    let out = gridshield(&["generate", "--network", s(&fixture("ieee15.json")), "--config", s(&cfg)]);
    assert_eq!(code(&out), 2);
}
