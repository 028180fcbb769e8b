use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name)
}

fn fraglearn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fraglearn")).current_dir(dir).args(args).output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn train(dir: &Path, run: &str, seed: &str) {
    let d = data("chain_extenders.smi");
    ok(&fraglearn(dir, &["train", "--data", d.to_str().unwrap(), "--epochs", "3", "--seed", seed, "--run-dir", run]));
}

#[test]
fn train_writes_the_run_layout_and_is_seeded() {
    let tmp = tempfile::tempdir().unwrap();
    train(tmp.path(), "a", "7");
    train(tmp.path(), "b", "7");
    for f in ["config.toml", "state.json", "qtable.json", "kb.json", "metrics.csv", "session.json"] {
        assert!(tmp.path().join("a").join(f).is_file(), "{f}");
    }
    let read = |r: &str| std::fs::read_to_string(tmp.path().join(r).join("state.json")).unwrap();
    assert_eq!(read("a"), read("b"));
    let csv = std::fs::read_to_string(tmp.path().join("a/metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);

    let again = fraglearn(tmp.path(), &["train", "--run-dir", "a", "--epochs", "1"]);
    assert_eq!(again.status.code(), Some(1));
    ok(&fraglearn(tmp.path(), &["train", "--run-dir", "a", "--epochs", "2", "--resume"]));
    let csv = std::fs::read_to_string(tmp.path().join("a/metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn generate_then_evaluate() {
    let tmp = tempfile::tempdir().unwrap();
    train(tmp.path(), "run", "1");
    ok(&fraglearn(tmp.path(), &["generate", "--run-dir", "run", "--count", "150", "--out", "gen.smi", "--seed", "3"]));
    assert_eq!(std::fs::read_to_string(tmp.path().join("gen.smi")).unwrap().lines().count(), 150);
    let sidecar: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("gen.json")).unwrap()).unwrap();
    assert_eq!(sidecar["seed"], 3);
    assert_eq!(sidecar["molecules"].as_array().unwrap().len(), 150);

    let train_file = data("chain_extenders.smi");
    let out = ok(&fraglearn(tmp.path(), &["evaluate", "--generated", "gen.smi", "--train", train_file.to_str().unwrap(), "--json"]));
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["validity"], 100.0);
    assert_eq!(report["count"], 150);
}

#[test]
fn evaluate_table_columns_and_self_novelty() {
    let tmp = tempfile::tempdir().unwrap();
    let acr = data("acrylates.smi");
    let out = ok(&fraglearn(tmp.path(), &["evaluate", "--generated", acr.to_str().unwrap(), "--train", acr.to_str().unwrap()]));
    let mut lines = out.lines();
    let header: Vec<&str> = lines.next().unwrap().split("  ").map(str::trim).filter(|s| !s.is_empty()).collect();
    assert_eq!(&header[..8], ["Dis w/", "Dis w/o", "Valid (%)", "Unique (%)", "Novel (%)", "Cham.", "Div.", "Mem. (%)"]);
    let values: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
    assert_eq!(values[4], "0.0");
    assert_eq!(values[5], "0.000");
}

#[test]
fn agent_rounds_close_and_extend_the_history() {
    let tmp = tempfile::tempdir().unwrap();
    let config = r#"
epochs = 5

[objective]
preset = "drug_like"

[round]
generate = 400
top_n = 50
review_top = 50
epochs_per_round = 2

[tuning.chemist]
persona = [{ type = "set_threshold", property = "mw", value = 300.0 }]
diversity_floor = 0.95
"#;
    std::fs::write(tmp.path().join("loop.toml"), config).unwrap();
    let d = data("toy_drugs.smi");
    ok(&fraglearn(tmp.path(), &["train", "--config", "loop.toml", "--data", d.to_str().unwrap(), "--epochs", "0", "--seed", "1"]));
    let out = ok(&fraglearn(tmp.path(), &["round", "--mode", "agent-agent", "--rounds", "3"]));
    assert_eq!(out.lines().filter(|l| l.contains("closed")).count(), 3, "{out}");
    let kb: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("run/kb.json")).unwrap()).unwrap();
    assert!(kb["history"].as_array().unwrap().len() >= 3);
    for n in 1..=3 {
        assert!(tmp.path().join(format!("run/rounds/{n}/top.json")).is_file());
    }
    let report = ok(&fraglearn(tmp.path(), &["export-report"]));
    assert!(report.contains("## Rounds") && report.contains("| 3 | Closed |"));
}

#[test]
fn human_round_takes_feedback_from_a_file() {
    let tmp = tempfile::tempdir().unwrap();
    train(tmp.path(), "run", "2");
    let opened = ok(&fraglearn(tmp.path(), &["round", "--mode", "human-agent", "--set", "round.generate=200"]));
    assert!(opened.contains("open, awaiting feedback"));
    let second = fraglearn(tmp.path(), &["round"]);
    assert_eq!(second.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&second.stderr).contains("already open"));

    std::fs::write(tmp.path().join("fb.json"), r#"{"id":"fb-1","items":[{"type":"adjust_weight","term":"diversity","delta":0.2}]}"#).unwrap();
    let out = ok(&fraglearn(tmp.path(), &["round", "--feedback", "fb.json"]));
    let response: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(response["sufficient"], true);
    assert_eq!(response["round_status"], "closed");
    let closed = fraglearn(tmp.path(), &["round", "--feedback", "fb.json", "--round", "1"]);
    assert_eq!(closed.status.code(), Some(1));
}

#[test]
fn json_config_and_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("c.json"), r#"{"seed": 5, "epochs": 2, "qlearn": {"alpha": 0.3}}"#).unwrap();
    let d = data("chain_extenders.smi");
    ok(&fraglearn(tmp.path(), &["train", "--config", "c.json", "--set", "qlearn.epsilon=0.05", "--data", d.to_str().unwrap()]));
    let cfg = std::fs::read_to_string(tmp.path().join("run/config.toml")).unwrap();
    let cfg: toml::Table = toml::from_str(&cfg).unwrap();
    assert_eq!(cfg["seed"].as_integer(), Some(5));
    assert_eq!(cfg["qlearn"]["alpha"].as_float(), Some(0.3));
    assert_eq!(cfg["qlearn"]["epsilon"].as_float(), Some(0.05));
    let state: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("run/state.json")).unwrap()).unwrap();
    assert_eq!(state["epoch"], 2);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let none = fraglearn(tmp.path(), &[]);
    assert_eq!(none.status.code(), Some(2));
    let bad = fraglearn(tmp.path(), &["generate", "--count", "many"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("--count"));
    let bad_set = fraglearn(tmp.path(), &["train", "--set", "qlearn.nope=1", "--data", "x.smi"]);
    assert_eq!(bad_set.status.code(), Some(2));
    let bad_mode = fraglearn(tmp.path(), &["round", "--mode", "solo"]);
    assert_eq!(bad_mode.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_mode.stderr).contains("--mode"));
    let missing = fraglearn(tmp.path(), &["inspect-vocab", "--run-dir", "absent"]);
    assert_eq!(missing.status.code(), Some(1));
    std::fs::write(tmp.path().join("bad.smi"), "CCO\nC1CC\n").unwrap();
    let invalid = fraglearn(tmp.path(), &["train", "--data", "bad.smi"]);
    assert_eq!(invalid.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&invalid.stderr).contains("line 2"));
}

#[test]
fn inspect_vocab_lists_fragments() {
    let tmp = tempfile::tempdir().unwrap();
    train(tmp.path(), "run", "4");
    let out = ok(&fraglearn(tmp.path(), &["inspect-vocab", "--top", "3", "--json"]));
    let rows: serde_json::Value = serde_json::from_str(&out).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows[0]["score"].as_f64().unwrap() >= rows[1]["score"].as_f64().unwrap());
    assert!(rows.iter().all(|r| r["fragment"].as_str().unwrap().contains("[*:")));
}
