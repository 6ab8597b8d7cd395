use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;
use wfopt_core::fixtures;

fn wfopt(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wfopt"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn setup() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    for name in ["chain", "diamond", "reuse-heavy"] {
        let o = wfopt(dir.path(), &["fixture", name, "-o", &format!("{name}.json")]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    dir
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

#[test]
fn validate_reports_ok() {
    let dir = setup();
    let o = wfopt(dir.path(), &["validate", "diamond.json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("ok: 4 jobs, 4 edges"), "{}", stdout(&o));
}

#[test]
fn cyclic_ir_exits_3() {
    let dir = setup();
    let cyclic = json!({
        "ir_version": 1,
        "name": "loop",
        "jobs": [{"step_name": "a", "image": "i"}, {"step_name": "b", "image": "i"}],
        "edges": [{"from": "a", "to": "b"}, {"from": "b", "to": "a"}],
        "artifacts": []
    });
    write(dir.path(), "cyc.json", &cyclic.to_string());
    let o = wfopt(dir.path(), &["validate", "cyc.json"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("cycle among steps {a, b}") || stderr(&o).contains("cycle among steps {a, b}"));
    let o = wfopt(dir.path(), &["simulate", "cyc.json"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn malformed_ir_exits_3() {
    let dir = setup();
    write(dir.path(), "bad.json", "{bad");
    assert_eq!(wfopt(dir.path(), &["validate", "bad.json"]).status.code(), Some(3));
    write(dir.path(), "v2.json", r#"{"ir_version": 2, "name": "x", "jobs": [], "edges": [], "artifacts": []}"#);
    assert_eq!(wfopt(dir.path(), &["validate", "v2.json"]).status.code(), Some(3));
}

#[test]
fn usage_errors_exit_2() {
    let dir = setup();
    assert_eq!(wfopt(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(wfopt(dir.path(), &["validate", "missing.json"]).status.code(), Some(2));
    assert_eq!(wfopt(dir.path(), &["simulate", "chain.json", "--policy", "MRU"]).status.code(), Some(2));
    assert_eq!(wfopt(dir.path(), &["split", "chain.json", "--size-limit", "lots"]).status.code(), Some(2));
    assert_eq!(wfopt(dir.path(), &["emit"]).status.code(), Some(2));
    write(dir.path(), "bad.toml", "[cache]\nbogus = 1\n");
    assert_eq!(wfopt(dir.path(), &["--config", "bad.toml", "validate", "chain.json"]).status.code(), Some(2));
}

#[test]
fn pipeline_failures_exit_4() {
    let dir = setup();
    write(dir.path(), "desc.txt", fixtures::MODEL_SELECTION_DESCRIPTION);
    write(dir.path(), "empty.json", "{}");
    let o = wfopt(dir.path(), &["synth", "desc.txt", "--client", "mock:empty.json", "-o", "out"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error: "));
}

#[test]
fn json_flag_switches_output() {
    let dir = setup();
    let o = wfopt(dir.path(), &["--json", "validate", "diamond.json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["valid"], json!(true));

    let o = wfopt(dir.path(), &["--json", "simulate", "chain.json", "--policy", "NO"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["policy"], json!("NO"));
    assert_eq!(v["hits"], json!(0));

    let o = wfopt(dir.path(), &["--json", "simulate", "reuse-heavy.json", "--compare", "NO,IMPORTANCE,LRU"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let names: Vec<&str> = v["rows"].as_array().unwrap().iter().map(|r| r["policy"].as_str().unwrap()).collect();
    assert_eq!(names, ["NO", "IMPORTANCE", "LRU"]);
}

#[test]
fn policy_alias_is_accepted() {
    let dir = setup();
    let o = wfopt(dir.path(), &["--json", "simulate", "chain.json", "--policy", "COULER"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["policy"], json!("IMPORTANCE"));
}

#[test]
fn flags_override_config_file() {
    let dir = setup();
    write(dir.path(), "cfg.toml", "[cache]\ncapacity = \"1GiB\"\n[simulate]\npolicy = \"LRU\"\n");
    let run = |args: &[&str]| -> Value {
        let o = wfopt(dir.path(), args);
        assert!(o.status.success(), "{}", stderr(&o));
        serde_json::from_str(&stdout(&o)).unwrap()
    };
    let from_file = run(&["--json", "--config", "cfg.toml", "simulate", "chain.json"]);
    assert_eq!(from_file["policy"], json!("LRU"));
    assert_eq!(from_file["peak_cache_bytes"], json!(1u64 << 30));

    let flagged = run(&["--json", "--config", "cfg.toml", "simulate", "chain.json", "--policy", "FIFO", "--capacity", "2GiB"]);
    assert_eq!(flagged["policy"], json!("FIFO"));
    assert_eq!(flagged["peak_cache_bytes"], json!(2u64 << 30));

    let defaults = run(&["--json", "simulate", "chain.json"]);
    assert_eq!(defaults["policy"], json!("IMPORTANCE"));
}

#[test]
fn split_then_emit_manifest() {
    let dir = setup();
    let o = wfopt(dir.path(), &["split", "reuse-heavy.json", "--step-limit", "10", "-o", "parts"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("parts/manifest.json")).unwrap()).unwrap();
    let parts = manifest["parts"].as_array().unwrap();
    assert_eq!(parts.len(), 3);

    let o = wfopt(dir.path(), &["emit", "--manifest", "parts/manifest.json", "-o", "yaml"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let written = std::fs::read_dir(dir.path().join("yaml")).unwrap().count();
    assert_eq!(written, parts.len());
}

#[test]
fn emit_writes_yaml() {
    let dir = setup();
    let o = wfopt(dir.path(), &["emit", "diamond.json", "--backend", "argo", "-o", "d.yaml"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("d.yaml")).unwrap();
    assert!(text.starts_with("apiVersion: argoproj.io/v1alpha1"));
    assert_eq!(wfopt(dir.path(), &["emit", "diamond.json", "--backend", "airflow"]).status.code(), Some(2));
}

#[test]
fn tune_marks_the_selection() {
    let dir = setup();
    write(
        dir.path(),
        "data.json",
        &json!({"dataset_name": "cifar-10", "input_type": "image", "label_space": ["cat"], "metrics": [{"name": "accuracy", "direction": "maximize"}]}).to_string(),
    );
    write(dir.path(), "model.json", &json!({"name": "resnet-18", "structure": "cnn", "description": "d"}).to_string());
    write(dir.path(), "hp.json", &json!([{"lr": 0.1}, {"lr": 0.01}, {"lr": 0.001}]).to_string());
    write(dir.path(), "script.json", &json!({"predict_log": [[0.81], [0.90], [0.85]]}).to_string());
    let args = ["--data-card", "data.json", "--model-card", "model.json", "--hp", "hp.json", "--client", "mock:script.json"];
    let o = wfopt(dir.path(), &[&["--json", "tune"][..], &args].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["selected_index"], json!(1));
    let table = stdout(&wfopt(dir.path(), &[&["tune"][..], &args].concat()));
    let marked: Vec<&str> = table.lines().filter(|l| l.split_whitespace().nth(1) == Some("*")).collect();
    assert_eq!(marked.len(), 1, "{table}");
    assert!(marked[0].starts_with("1 ") && marked[0].contains(r#"{"lr":0.01}"#));
}
