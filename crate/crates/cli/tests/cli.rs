use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ltlf_bt::experiments::keydoor::KD_MISSION;
use ltlf_bt::gridworld::C2H_MISSION;
use serde_json::Value;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ltlf-bt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn c2h_compiles_to_dot() {
    let dir = tempfile::tempdir().unwrap();
    let mission = write(dir.path(), "c2h.txt", C2H_MISSION);
    let dot = dir.path().join("c2h.dot");
    let json = dir.path().join("c2h.json");
    let out = cli(&[
        "compile",
        "--mission",
        &mission,
        "--dot",
        dot.to_str().unwrap(),
        "--out",
        json.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let dot = fs::read_to_string(dot).unwrap();
    assert!(dot.starts_with("digraph bt {"));
    assert!(dot.contains("◇ mission T=50"));
    assert!(dot.contains("◇ task cheese"));
    assert!(dot.contains("◇ task home"));
    assert!(dot.contains("□ cheese"));
    assert!(dot.contains("◯ !Fire"));
    assert_eq!(dot.matches("◇ finally θ=0").count(), 2);
    // root, sequence, two Finally nodes and two 15-node task subtrees
    assert_eq!(dot.matches("label=").count(), 34);
    assert_eq!(dot.matches(" -> ").count(), 33);

    let tree: Value = serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(tree["decorator"], "mission_root");
    assert_eq!(tree["child"]["type"], "sequence");
}

#[test]
fn empty_file_is_a_syntax_error() {
    let dir = tempfile::tempdir().unwrap();
    let mission = write(dir.path(), "empty.txt", "");
    for cmd in ["parse", "compile"] {
        let out = cli(&[cmd, "--mission", &mission]);
        assert_eq!(out.status.code(), Some(1));
        assert!(
            stderr(&out).contains("syntax error at 1:1"),
            "{}",
            stderr(&out)
        );
    }
}

#[test]
fn keydoor_mission_is_nested_until() {
    let dir = tempfile::tempdir().unwrap();
    let mission = write(dir.path(), "kd.txt", KD_MISSION);
    let out = cli(&["parse", "--mission", &mission]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let m = &doc["mission"];
    assert_eq!(m["op"], "until");
    assert_eq!(m["lhs"]["arg"]["task"]["name"], "key");
    assert_eq!(m["rhs"]["op"], "until");
    assert_eq!(m["rhs"]["lhs"]["arg"]["task"]["name"], "door");
    assert_eq!(m["rhs"]["rhs"]["arg"]["task"]["name"], "prize");

    let out = cli(&[
        "compile",
        "--mission",
        &mission,
        "--theta",
        "1",
        "--max-trace",
        "60",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let tree: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(tree["t_task_max"], 60);
    let outer = &tree["child"];
    assert_eq!(outer["type"], "sequence");
    let key = &outer["children"][0];
    assert_eq!(key["decorator"], "finally_reset");
    assert_eq!(key["theta"], 1);
    assert_eq!(key["child"]["task"], "key");
    let inner = &outer["children"][1];
    assert_eq!(inner["type"], "sequence");
    assert_eq!(inner["children"][0]["child"]["task"], "door");
    assert_eq!(inner["children"][1]["child"]["task"], "prize");
}

#[test]
fn json_mission_round_trips_through_parse() {
    let dir = tempfile::tempdir().unwrap();
    let text = write(dir.path(), "kd.txt", KD_MISSION);
    let out = cli(&["parse", "--mission", &text]);
    let json = write(dir.path(), "kd.json", &stdout(&out));
    let again = cli(&["parse", "--mission", &json]);
    assert!(again.status.success(), "{}", stderr(&again));
    assert_eq!(stdout(&again), stdout(&out));
}

#[test]
fn zero_trial_sweep_writes_header_only() {
    let out = cli(&["sweep", "--trials", "0"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1);

    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.json",
        r#"{"r_other":[-0.04],"r_good":[1.0],"r_fire":[-1.0],"p_in":[0.9]}"#,
    );
    let full = cli(&["sweep", "--config", &cfg, "--trials", "5", "--seed", "3"]);
    assert!(full.status.success(), "{}", stderr(&full));
    let full = stdout(&full);
    assert_eq!(full.lines().next(), text.lines().next());
    assert_eq!(full.lines().count(), 2);
}

#[test]
fn sweep_rows_reproduce_from_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.json",
        r#"{"r_other":[-1.5,-0.04],"r_good":[1.0],"r_fire":[-1.0],"p_in":[0.9]}"#,
    );
    let a = cli(&["sweep", "--config", &cfg, "--trials", "20", "--seed", "11"]);
    let b = cli(&["sweep", "--config", &cfg, "--trials", "20", "--seed", "11"]);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn fuzzed_verification_reports_violations_with_exit_2() {
    let out = cli(&[
        "verify",
        "--trials",
        "50",
        "--seed",
        "2024",
        "--max-trace",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("4/50 missions with violations"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn single_task_mission_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let mission = write(
        dir.path(),
        "t.txt",
        "props p q r; task(t, post=p, pre=q, gc=!r, tc=q, action=a); F t",
    );
    let report = dir.path().join("report.json");
    let out = cli(&[
        "verify",
        "--mission",
        &mission,
        "--max-trace",
        "4",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: Value = serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(report[0]["report"]["n_violations"], 0);
    assert!(report[0]["report"]["n_bt_success_traces"].as_u64().unwrap() > 0);
}

#[test]
fn learn_then_infer() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("learn");
    let cfg = write(dir.path(), "learn.json", r#"{"p_in":[0.95]}"#);
    let out = cli(&[
        "learn",
        "--config",
        &cfg,
        "--runs",
        "2",
        "--episodes",
        "20",
        "--trials",
        "5",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let curves = fs::read_to_string(out_dir.join("curves.csv")).unwrap();
    assert!(curves.starts_with("p_in,run,seed,episode,status,trace_len"));
    assert_eq!(curves.lines().count(), 1 + 2 * 20);
    let rows = fs::read_to_string(out_dir.join("learning.csv")).unwrap();
    assert_eq!(rows.lines().count(), 3);

    let policies = out_dir.join("policies.json");
    let out = cli(&[
        "infer",
        "--config",
        policies.to_str().unwrap(),
        "--trials",
        "7",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let results: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(results.as_array().unwrap().len(), 2);
    assert_eq!(results[0]["n_trials"], 7);
    assert_eq!(results[0]["violations"], 0);
}

#[test]
fn keydoor_modes() {
    let out = cli(&["keydoor", "--mode", "bt"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let reports: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 1);
    assert_eq!(reports[0]["mode"], "bt");
    assert_eq!(reports[0]["undisturbed_successes"], 10);

    let out = cli(&["keydoor", "--mode", "baseline"]);
    let reports: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(reports[0]["disturbed_successes"], 0);
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cli(&["compile"]).status.code(), Some(1));
    assert_eq!(cli(&["sweep", "--trials", "lots"]).status.code(), Some(1));
    assert_eq!(cli(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_file_exits_1() {
    let out = cli(&["parse", "--mission", "/nonexistent/mission.txt"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("reading"));
}
