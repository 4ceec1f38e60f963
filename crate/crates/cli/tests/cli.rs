//! End-to-end checks of the binary: exit codes, flag/file precedence,
//! deterministic outputs, and report formats.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

/// A command for the built binary with cap overrides scrubbed, so an
/// outer environment cannot skew a test.
fn brcap() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_brcap"));
    cmd.env_remove("BRCAP_ENUM_CAP");
    cmd.env_remove("BRCAP_SUBSET_CAP");
    cmd
}

fn run(cmd: &mut Command) -> (Option<i32>, String, String) {
    let Output {
        status,
        stdout,
        stderr,
    } = cmd.output().expect("binary runs");
    (
        status.code(),
        String::from_utf8_lossy(&stdout).into_owned(),
        String::from_utf8_lossy(&stderr).into_owned(),
    )
}

fn write_instance(path: &Path) {
    let text = r#"{
  "params": { "n": 4, "k": 2, "d": 2, "r": 1, "alpha": 2, "beta": 1, "T": 2 },
  "rounds": [
    { "failed": [1], "helpers": [2, 3] },
    { "failed": [2], "helpers": [3, 5] }
  ]
}"#;
    fs::write(path, text).unwrap();
}

#[test]
fn capacity_prints_bound_and_agreement() {
    let (code, out, _) = run(brcap()
        .args(["capacity", "--n", "8", "--k", "3", "--d", "4", "--r", "2"])
        .args(["--alpha", "2", "--beta", "1"]));
    assert_eq!(code, Some(0));
    assert!(out.contains("B = 5"), "stdout: {out}");

    let (code, out, _) = run(brcap()
        .args(["capacity", "--n", "4", "--k", "2", "--d", "2", "--r", "1"])
        .args(["--alpha", "2", "--beta", "1"]));
    assert_eq!(code, Some(0));
    assert!(out.contains("B = 3"), "stdout: {out}");
    assert!(out.contains("closed form agrees: 3"), "stdout: {out}");
}

#[test]
fn capacity_trivial_regime_notice() {
    let (code, out, _) = run(brcap()
        .args(["capacity", "--n", "5", "--k", "2", "--d", "2", "--r", "2"])
        .args(["--alpha", "2", "--beta", "1"]));
    assert_eq!(code, Some(0));
    assert!(out.contains("trivial regime"), "stdout: {out}");
    assert!(out.contains("capacity = 2"), "stdout: {out}");
}

#[test]
fn missing_parameter_is_invalid_input() {
    let (code, _, err) = run(brcap()
        .args(["capacity", "--n", "4", "--k", "2", "--d", "2", "--r", "1"])
        .args(["--alpha", "2"]));
    assert_eq!(code, Some(2));
    assert!(err.contains("beta"), "stderr: {err}");
}

#[test]
fn unknown_config_key_is_invalid_input() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{ "n": 4, "k": 2, "d": 2, "r": 1, "alpha": 2, "beta": 1, "betta": 3 }"#)
        .unwrap();
    let (code, _, err) = run(brcap().args(["capacity", "--config", cfg.to_str().unwrap()]));
    assert_eq!(code, Some(2));
    assert!(err.contains("betta"), "stderr: {err}");
}

#[test]
fn flags_take_precedence_over_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{ "n": 4, "k": 2, "d": 2, "r": 1, "alpha": 2, "beta": 9 }"#).unwrap();

    let (code, out, _) = run(brcap().args(["capacity", "--config", cfg.to_str().unwrap()]));
    assert_eq!(code, Some(0));
    assert!(out.contains("B = 4"), "file beta=9 should give 4: {out}");

    let (code, out, _) =
        run(brcap().args(["capacity", "--config", cfg.to_str().unwrap(), "--beta", "1"]));
    assert_eq!(code, Some(0));
    assert!(out.contains("B = 3"), "flag beta=1 should give 3: {out}");
}

#[test]
fn verify_sweep_and_cap_exhaustion() {
    let args = [
        "verify", "--n", "4", "--k", "2", "--d", "2", "--r", "1", "--alpha", "2", "--beta", "1",
        "--tmax", "3",
    ];
    let (code, out, _) = run(brcap().args(args));
    assert_eq!(code, Some(0));
    assert!(out.contains("[4, 3, 3, 3]"), "stdout: {out}");

    let (code, _, err) = run(brcap().args(args).env("BRCAP_ENUM_CAP", "10"));
    assert_eq!(code, Some(3));
    assert!(err.contains("BRCAP_ENUM_CAP"), "stderr: {err}");
}

#[test]
fn verify_adversarial_only_mode() {
    let (code, out, _) = run(brcap()
        .args(["verify", "--n", "4", "--k", "2", "--d", "2", "--r", "1"])
        .args(["--alpha", "2", "--beta", "1", "--adversarial-only"]));
    assert_eq!(code, Some(0));
    assert!(out.contains("designated flow 3"), "stdout: {out}");
}

#[test]
fn simulate_requires_a_seed() {
    let (code, _, err) = run(brcap()
        .args(["simulate", "--n", "4", "--k", "2", "--d", "2", "--r", "1"])
        .args(["--alpha", "2", "--beta", "1", "--rounds", "3"]));
    assert_eq!(code, Some(2));
    assert!(err.contains("--seed"), "stderr: {err}");
}

#[test]
fn simulate_generic_decodes_at_capacity_and_fails_above() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("report.json");
    let base = [
        "simulate", "--n", "4", "--k", "2", "--d", "2", "--r", "1", "--alpha", "2", "--beta",
        "1", "--rounds", "3", "--seed", "0", "--code", "generic",
    ];

    let (code, out, _) = run(brcap()
        .args(base)
        .args(["--field", "47", "--out", out_path.to_str().unwrap()]));
    assert_eq!(code, Some(0));
    assert!(out.contains("0 failures"), "stdout: {out}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report["result"]["failures"], 0);
    assert_eq!(report["config"]["omega"], 3);
    assert_eq!(report["result"]["stages"][1]["mode"], "deterministic");

    let (code, _, err) = run(brcap().args(base).args(["--field", "127", "--omega", "4"]));
    assert_eq!(code, Some(1));
    assert!(err.contains("unable to decode"), "stderr: {err}");
}

#[test]
fn simulate_same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let args = |tag: &str| {
        let out = dir.path().join(format!("report-{tag}.json"));
        let trace = dir.path().join(format!("trace-{tag}.jsonl"));
        (out, trace)
    };
    let mut outputs = Vec::new();
    for tag in ["a", "b"] {
        let (out, trace) = args(tag);
        let (code, _, _) = run(brcap()
            .args(["simulate", "--n", "4", "--k", "2", "--d", "2", "--r", "1"])
            .args(["--alpha", "2", "--beta", "1", "--rounds", "3", "--seed", "7"])
            .args(["--out", out.to_str().unwrap(), "--trace", trace.to_str().unwrap()]));
        assert_eq!(code, Some(0));
        outputs.push((fs::read(&out).unwrap(), fs::read(&trace).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1], "same seed must give identical bytes");

    let report: serde_json::Value =
        serde_json::from_str(&String::from_utf8(outputs[0].0.clone()).unwrap()).unwrap();
    assert_eq!(report["prng"]["algorithm"], "chacha20");
    assert_eq!(report["prng"]["seed"], 7);
    assert_eq!(report["tool"]["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn mincut_reports_flow_and_exports_the_graph() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    write_instance(&inst);
    let export = dir.path().join("graph.json");
    let out = dir.path().join("report.json");

    let (code, stdout, _) = run(brcap()
        .args(["mincut", "--instance", inst.to_str().unwrap()])
        .args(["--stage", "2", "--collector", "5,6"])
        .args(["--export", export.to_str().unwrap(), "--out", out.to_str().unwrap()]));
    assert_eq!(code, Some(0));
    assert!(stdout.contains("max flow"), "stdout: {stdout}");

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["result"]["max_flow"], 3);

    let graph: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&export).unwrap()).unwrap();
    assert!(graph["vertices"].as_array().unwrap().len() > 10);
    assert!(graph["edges"].as_array().unwrap().iter().any(|e| e
        .as_str()
        .unwrap()
        .ends_with("INF")));
}

#[test]
fn mincut_rejects_garbage_collector() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    write_instance(&inst);
    let (code, _, err) = run(brcap()
        .args(["mincut", "--instance", inst.to_str().unwrap()])
        .args(["--stage", "2", "--collector", "5,chair"]));
    assert_eq!(code, Some(2));
    assert!(err.contains("chair"), "stderr: {err}");
}

#[test]
fn tradeoff_emits_reference_rows_and_exact_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let exact = dir.path().join("exact.json");
    let (code, out, _) = run(brcap()
        .args(["tradeoff", "--k", "4", "--d", "9", "--r", "2", "--samples", "5"])
        .args(["--exact-out", exact.to_str().unwrap()]));
    assert_eq!(code, Some(0));
    assert!(out.starts_with("scheme,tau,alpha,label\n"), "stdout: {out}");
    assert!(out.contains("broadcast,0.321,0.250,MSB"), "stdout: {out}");
    assert!(out.contains("broadcast,0.281,0.281,MTB"), "stdout: {out}");
    assert!(out.contains("cooperative,0.357,0.250,MSC"), "stdout: {out}");

    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&exact).unwrap()).unwrap();
    assert_eq!(sidecar["result"]["broadcast"]["ms"]["tau"], "9/28");
    assert_eq!(sidecar["result"]["dominance"]["ms_gap"], "1/28");
    assert_eq!(sidecar["result"]["dominance"]["mt_gap"], "1/64");
    assert_eq!(sidecar["result"]["dominance"]["strict"], true);
}

#[test]
fn tradeoff_rejects_indivisible_group_size() {
    let (code, _, err) = run(brcap().args(["tradeoff", "--k", "4", "--d", "9", "--r", "3"]));
    assert_eq!(code, Some(2));
    assert!(!err.is_empty());
}
