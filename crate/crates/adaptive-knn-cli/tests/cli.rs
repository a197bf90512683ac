//! Smoke tests for the CLI subcommands.

use std::process::Command;

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_adaptive-knn"))
}

#[test]
fn gen_then_run_emits_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.csv");
    let status = cli()
        .args(["gen", "--n", "10", "--m", "16", "--p", "2", "--seed", "7"])
        .args(["--out", inst.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());

    let output = cli()
        .args(["run", "--data", inst.to_str().unwrap()])
        .args(["--k", "2", "--h", "1", "--delta", "0.05"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(report["result_set"].as_array().unwrap().len(), 3);
    assert_eq!(report["n"], 10);
    assert_eq!(report["m"], 16);
}

#[test]
fn bounds_reads_sorted_distances_file() {
    let dir = tempfile::tempdir().unwrap();
    let dists = dir.path().join("dists.txt");
    std::fs::write(&dists, "0.1\n0.2\n0.5\n0.9\n").unwrap();
    let output = cli()
        .args(["bounds", "--data", dists.to_str().unwrap()])
        .args(["--k", "1", "--h", "1", "--m", "1000000", "--delta", "0.05"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    let score = report["upper_score"].as_f64().unwrap();
    assert!((score - 20.3125).abs() < 1e-9);
    assert_eq!(report["per_arm_fixed_points"].as_array().unwrap().len(), 4);
}

#[test]
fn sweep_accepts_json_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.json");
    std::fs::write(
        &config,
        r#"{
            "source": { "kind": "subspace", "n": 20, "m": 32, "p": 2 },
            "c_alpha_grid": [1.0],
            "trials": 2,
            "k": 2,
            "h": 1,
            "delta": 0.05,
            "variant": "experimental",
            "sampling_mode": "with-replacement",
            "master_seed": 1
        }"#,
    )
    .unwrap();
    let out = dir.path().join("sweep.json.out");
    let status = cli()
        .args(["sweep", "--config", config.to_str().unwrap()])
        .args(["--out", out.to_str().unwrap(), "--format", "json"])
        .status()
        .unwrap();
    assert!(status.success());
    let result: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(result["records"].as_array().unwrap().len(), 2);
    assert_eq!(result["summaries"].as_array().unwrap().len(), 1);
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let output = cli().arg("frobnicate").output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(!output.stderr.is_empty());
}
