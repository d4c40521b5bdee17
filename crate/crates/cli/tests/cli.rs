use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pushnav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pushnav"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn run_small(dir: &Path) -> Output {
    pushnav(&[
        "run",
        "--env",
        "maze",
        "--policy",
        "dt_descent",
        "--episodes",
        "3",
        "--seed",
        "5",
        "--max_steps",
        "150",
        "--out",
        dir.to_str().unwrap(),
    ])
}

#[test]
fn run_then_metrics_then_replay() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = run_small(&out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("maze / dt_descent: 3 episodes"));
    let jsonl = fs::read_to_string(out.join("episodes.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 3);
    let spec: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(spec["config"]["max_steps"], 150);
    assert_eq!(spec["base_seed"], 5);

    let o = pushnav(&["metrics", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("summary matches"));

    let o = pushnav(&["replay", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).matches("identical").count(), 3);
}

#[test]
fn tampered_outputs_exit_with_divergence() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    assert_eq!(code(&run_small(&out)), 0);

    // A log with a changed action no longer replays.
    let log_path = out.join("logs").join("episode_00000.json");
    let mut log: serde_json::Value = serde_json::from_str(&fs::read_to_string(&log_path).unwrap()).unwrap();
    log["steps"][3]["action"]["omega"] = serde_json::json!(0.777);
    fs::write(&log_path, serde_json::to_string(&log).unwrap()).unwrap();
    let o = pushnav(&["replay", log_path.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("step 3"));

    // A stored score that does not recompute.
    let jsonl = out.join("episodes.jsonl");
    let text = fs::read_to_string(&jsonl).unwrap();
    let mut lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    lines[1]["I"] = serde_json::json!(0.123);
    let body: Vec<String> = lines.iter().map(|v| v.to_string()).collect();
    fs::write(&jsonl, body.join("\n") + "\n").unwrap();
    assert_eq!(code(&pushnav(&["metrics", jsonl.to_str().unwrap()])), 3);
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().to_str().unwrap();
    for args in [
        vec!["run", "--policy", "nope", "--episodes", "1"],
        vec!["run", "--env", "maze", "--policy", "gtsp", "--episodes", "1"],
        vec!["run", "--resolution", "-1", "--episodes", "1"],
        vec!["run", "--param", "gain", "--episodes", "1"],
        vec!["run", "--param", "bogus=1", "--episodes", "1"],
        vec!["run", "--no-such-flag"],
        vec!["observe", "--format", "png", "--out", d],
    ] {
        let o = pushnav(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"kind": "maze", "windoww": 3}"#).unwrap();
    assert_eq!(code(&pushnav(&["run", "--config", bad.to_str().unwrap()])), 2);
}

#[test]
fn config_file_and_key_flags_combine() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"kind": "area_clearing", "box_count": 2, "max_steps": 40}"#).unwrap();
    let out = tmp.path().join("run");
    let o = pushnav(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--policy",
        "gtsp",
        "--episodes",
        "2",
        "--physics.dt",
        "0.01",
        "--out",
        out.to_str().unwrap(),
        "--no-logs",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let spec: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(spec["config"]["box_count"], 2);
    assert_eq!(spec["config"]["physics"]["dt"], 0.01);
    assert!(!out.join("logs").exists());
}

#[test]
fn observe_writes_pgm_and_json() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().to_str().unwrap();
    let o = pushnav(&["observe", "--env", "box_delivery", "--out", d]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let pgm = fs::read(tmp.path().join("obs_goal_distance.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n64 64\n255\n"));
    let o = pushnav(&["observe", "--format", "json", "--out", d]);
    assert_eq!(code(&o), 0);
    let t: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("obs.json")).unwrap()).unwrap();
    assert_eq!(t["shape"][0], 4);
}
