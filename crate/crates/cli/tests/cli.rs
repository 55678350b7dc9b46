use std::path::PathBuf;
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn offload(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_offload"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("offload-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn replay_reproduces_golden() {
    let f = fixtures();
    let out = scratch("replay.jsonl");
    let o = offload(&[
        "replay",
        "--trace",
        f.join("scenario/trace.jsonl").to_str().unwrap(),
        "--config",
        f.join("config.toml").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--expect",
        f.join("scenario/golden.jsonl").to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        std::fs::read(&out).unwrap(),
        std::fs::read(f.join("scenario/golden.jsonl")).unwrap()
    );
}

#[test]
fn diff_log_reports_first_difference() {
    let golden = fixtures().join("scenario/golden.jsonl");
    let same = offload(&["diff-log", golden.to_str().unwrap(), golden.to_str().unwrap()]);
    assert!(same.status.success());

    let text = std::fs::read_to_string(&golden).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.truncate(lines.len() - 1);
    let short = scratch("short.jsonl");
    std::fs::write(&short, lines.join("\n") + "\n").unwrap();
    let o = offload(&["diff-log", golden.to_str().unwrap(), short.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains(&format!("line {}", lines.len() + 1)));
}

#[test]
fn gen_dom_is_deterministic_json() {
    let a = offload(&["gen-dom", "--seed", "7", "--max-nodes", "30"]);
    let b = offload(&["gen-dom", "--seed", "7", "--max-nodes", "30"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let n = v["nodes"].as_array().unwrap().len();
    assert!((1..=30).contains(&n), "{n} nodes");
    assert!(!offload(&["gen-dom", "--seed", "7", "--max-nodes", "0"])
        .status
        .success());
}

#[test]
fn oracle_check_passes() {
    let o = offload(&["oracle-check", "--count", "20", "--seed", "3"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("PASS"));
}

#[test]
fn bad_inputs_exit_with_error() {
    let bad = scratch("bad.jsonl");
    std::fs::write(&bad, "{\"t\":0,\"source\":\"phone\",\"body_type\":\"Nope\"}\n").unwrap();
    let o = offload(&[
        "replay",
        "--trace",
        bad.to_str().unwrap(),
        "--out",
        scratch("x.jsonl").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));

    let cfg = scratch("bad.toml");
    std::fs::write(&cfg, "[gesture]\nnope = 1\n").unwrap();
    let o = offload(&["oracle-check", "--count", "1", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
