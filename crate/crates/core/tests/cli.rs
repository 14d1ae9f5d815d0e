use std::fs;
use std::path::Path;
use std::process::Command;

use attest::cli::{main_with, EXIT_BREACH, EXIT_PASS, EXIT_USAGE};

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["attest"];
    argv.extend_from_slice(args);
    let code = main_with(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const CONCENTRATION: &str = r#"{
    "game": {"game": "concentration", "trials": 200, "seed": 9,
             "params": {"n": 256, "beta": 0.1, "gamma": 0.2}}
}"#;

const EXPLOIT: &str = r#"{
    "game": {"game": "exploit", "trials": 50, "seed": 3}
}"#;

#[test]
fn missing_config_is_a_usage_error() {
    let (code, _, err) = run(&["run", "exploit", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("usage: attest run"), "{err}");
    let (code, _, _) = run(&["validate", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn bad_arguments_are_usage_errors() {
    assert_eq!(run(&[]).0, EXIT_USAGE);
    assert_eq!(run(&["run", "no_such_game", "--config", "x"]).0, EXIT_USAGE);
    assert_eq!(run(&["run", "exploit"]).0, EXIT_USAGE);
    assert_eq!(run(&["--help"]).0, EXIT_PASS);
}

#[test]
fn passing_run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", CONCENTRATION);
    let out_dir = dir.path().join("out");
    let (code, out, err) = run(&[
        "run",
        "concentration",
        "--config",
        &cfg,
        "--jobs",
        "2",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_PASS, "{out}{err}");
    assert!(out.contains("result"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["game"], "concentration");
    assert_eq!(json["pass"], true);
    assert!(out_dir.join("report.txt").exists());
}

#[test]
fn exploit_passes_by_exhibiting_the_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "e.json", EXPLOIT);
    let (code, out, _) = run(&["run", "exploit", "--config", &cfg, "--json"]);
    assert_eq!(code, EXIT_PASS);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(
        v["rates"]["ver1_attr0"]["value"].as_f64().unwrap() >= 0.99,
        "{out}"
    );
}

#[test]
fn breached_threshold_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    // The copy model reproduces the planted string and constant-1 selection
    // attributes it, so zero violations cannot hold.
    let cfg = write(
        dir.path(),
        "s.json",
        r#"{"model": {"type": "copy"}, "rule": {"type": "constant", "value": true},
            "game": {"game": "soundness", "trials": 20, "seed": 1}}"#,
    );
    let (code, _, err) = run(&["run", "soundness", "--config", &cfg]);
    assert_eq!(code, EXIT_BREACH);
    assert!(err.contains("FAIL: soundness"), "{err}");
}

#[test]
fn invalid_config_reports_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{"response_len": 100,
            "scheme": {"scheme": "prc", "params": {"n": 128, "m": 2, "beta": 0.3, "gamma": 0.1},
                       "codec": {"backend": "ideal", "n": 128, "k": 0}},
            "game": {"game": "faithfulness", "seed": 1}}"#,
    );
    let (code, _, err) = run(&["validate", "--config", &cfg]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("response_len"), "{err}");
    assert!(
        err.lines()
            .filter(|l| l.trim_start().starts_with("- "))
            .count()
            >= 2,
        "{err}"
    );
    let (code, _, _) = run(&["run", "exploit", "--config", &cfg]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn validate_accepts_the_shipped_configs() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let (code, out, err) = run(&["validate", "--config", path.to_str().unwrap()]);
        assert_eq!(code, EXIT_PASS, "{}: {out}{err}", path.display());
        seen += 1;
    }
    assert!(seen >= 5);
}

#[test]
fn missing_seed_warns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "n.json",
        r#"{"game": {"game": "non_injectivity", "params": {"max_response_len": 4}}}"#,
    );
    let (code, _, err) = run(&["run", "non_injectivity", "--config", &cfg]);
    assert_eq!(code, EXIT_PASS, "{err}");
    assert!(err.contains("WARNING"), "{err}");
}

#[test]
fn ledger_dump_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let canonical = "{\"ev\":\"prompt\",\"i\":1,\"x\":\"hex:8/1\"}\n\
                     {\"ev\":\"token\",\"i\":1,\"j\":1,\"bit\":0}\n\
                     {\"ev\":\"token\",\"i\":1,\"j\":2,\"bit\":1}\n";
    let file = write(dir.path(), "l.jsonl", canonical);
    let (code, out, err) = run(&["ledger", "check", &file]);
    assert_eq!(code, EXIT_PASS, "{err}");
    assert!(
        out.contains("1 transcripts") && out.contains("canonical"),
        "{out}"
    );
    let (code, out, _) = run(&["ledger", "dump", &file]);
    assert_eq!(code, EXIT_PASS);
    assert_eq!(out, canonical);

    let bad = write(
        dir.path(),
        "bad.jsonl",
        "{\"ev\":\"token\",\"i\":1,\"j\":1,\"bit\":0}\n",
    );
    let (code, _, err) = run(&["ledger", "check", &bad]);
    assert_eq!(code, EXIT_BREACH);
    assert!(err.contains("line 1"), "{err}");
    assert_eq!(
        run(&["ledger", "check", "/nonexistent.jsonl"]).0,
        EXIT_USAGE
    );
}

#[test]
fn binary_honours_jobs_env_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", CONCENTRATION);
    let bin = env!("CARGO_BIN_EXE_attest");
    let a = Command::new(bin)
        .args(["run", "concentration", "--config", &cfg, "--json"])
        .env("ATTEST_JOBS", "1")
        .output()
        .unwrap();
    assert_eq!(a.status.code(), Some(EXIT_PASS));
    let b = Command::new(bin)
        .args([
            "run",
            "concentration",
            "--config",
            &cfg,
            "--json",
            "--jobs",
            "3",
        ])
        .output()
        .unwrap();
    assert_eq!(
        a.stdout, b.stdout,
        "worker count must not change the report"
    );
    let missing = Command::new(bin)
        .args(["run", "concentration", "--config", "/nonexistent.json"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(EXIT_USAGE));
}
