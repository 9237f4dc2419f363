use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_peerinfo");

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/fixtures")).join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(BIN).args(args).arg("--out").arg(out).env_remove("PEERINFO_OUT").output().expect("binary runs")
}

fn ok(args: &[&str], out: &Path) -> String {
    let o = run(args, out);
    assert!(
        o.status.success(),
        "{args:?} failed: {}\n{}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn small_config(dir: &Path) -> PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, "[population]\nn = 300\nseed = 11\n[clustering]\nk_max = 5\nrestarts = 3\n").unwrap();
    p
}

fn lines(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count()
}

#[test]
fn pipeline_counts_agree() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let cfg = small_config(out);
    let cfg = cfg.to_str().unwrap();
    ok(&["simulate", "--config", cfg], out);
    let schedules = out.join("schedules.csv");
    ok(&["classify", "--config", cfg, "--schedules", schedules.to_str().unwrap()], out);
    let (records, types) = (out.join("records.csv"), out.join("types.csv"));
    ok(&["welfare", "--config", cfg, "--records", records.to_str().unwrap(), "--types", types.to_str().unwrap()], out);
    assert_eq!(lines(&records), 301);
    assert_eq!(lines(&types), 301);
    assert_eq!(lines(&schedules), 1 + 300 * 18);
    let report = json(&out.join("policy_report.json"));
    assert_eq!(report["n_workers"], 300);
    let counted: u64 = report["type_counts"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(counted, 300);
    assert_eq!(report["policies"].as_array().unwrap().len(), 4);
    let effects = json(&out.join("effects.json"));
    assert_eq!(effects["n_workers"], 300);

    ok(&["report", "--config", cfg, "--records", records.to_str().unwrap()], out);
    assert_eq!(json(&out.join("report.json"))["n_workers"], 300);
}

#[test]
fn runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let cfg = small_config(dir);
        ok(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "5"], dir);
    }
    for name in ["records.csv", "schedules.csv", "effects.json"] {
        let (x, y) = (std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap());
        assert!(x == y, "{name} differs between runs");
    }
    let c = tempfile::tempdir().unwrap();
    let cfg = small_config(c.path());
    ok(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "6"], c.path());
    assert_ne!(
        std::fs::read(a.path().join("records.csv")).unwrap(),
        std::fs::read(c.path().join("records.csv")).unwrap()
    );
}

#[test]
fn jsonl_outputs_feed_later_steps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let cfg = small_config(out);
    let cfg = cfg.to_str().unwrap();
    ok(&["simulate", "--config", cfg, "--format", "jsonl"], out);
    assert_eq!(lines(&out.join("records.jsonl")), 300);
    assert_eq!(lines(&out.join("schedules.jsonl")), 300);
    let s = out.join("schedules.jsonl");
    ok(&["classify", "--config", cfg, "--format", "jsonl", "--schedules", s.to_str().unwrap()], out);
    let (r, t) = (out.join("records.jsonl"), out.join("types.jsonl"));
    ok(&["welfare", "--config", cfg, "--records", r.to_str().unwrap(), "--types", t.to_str().unwrap()], out);
    assert_eq!(json(&out.join("policy_report.json"))["n_workers"], 300);
}

#[test]
fn verify_writes_passing_report() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&["verify"], dir.path());
    assert!(stdout.contains("checks pass"));
    let report = json(&dir.path().join("theory_report.json"));
    assert_eq!(report["all_pass"], true);
    for m in report["models"].as_array().unwrap() {
        assert!(m["combinations"].as_u64().unwrap() >= 500);
    }
}

#[test]
fn verify_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    // A positive lambda2 is outside the inequality-averse model, so its
    // sign predictions must fail.
    std::fs::write(&cfg, "[verify.grid]\ninequality_averse = [[0.5, 0.2]]\n").unwrap();
    let o = run(&["verify", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&dir.path().join("theory_report.json"))["all_pass"], false);
}

#[test]
fn cluster_two_blobs_selects_two() {
    let dir = tempfile::tempdir().unwrap();
    let emb = fixture("two_blobs.emb");
    ok(&["cluster", "--embeddings", emb.to_str().unwrap()], dir.path());
    let report = json(&dir.path().join("cluster_report.json"));
    assert_eq!(report["k"], 2);
    assert_eq!(report["sizes"], serde_json::json!([30, 30]));
    assert_eq!(lines(&dir.path().join("clusters.csv")), 61);
}

#[test]
fn elicit_from_agent_file() {
    let dir = tempfile::tempdir().unwrap();
    let agents = dir.path().join("agents.jsonl");
    std::fs::write(
        &agents,
        concat!(
            r#"{"worker_id":"s1","model":{"model":"standard","cost":{"wage":1.0,"cost":0.04}}}"#,
            "\n",
            r#"{"worker_id":"t1","model":{"model":"stress","cost":{"wage":1.0,"cost":0.04},"stress":{"theta":0.3,"delta":0.0}}}"#,
            "\n"
        ),
    )
    .unwrap();
    ok(&["elicit", "--agents", agents.to_str().unwrap()], dir.path());
    let text = std::fs::read_to_string(dir.path().join("schedules.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 18);
    assert!(text.lines().filter(|l| l.starts_with("s1,")).all(|l| l.ends_with(",0")));
    assert!(text.contains("t1,exante,1,0,15"));
}

#[test]
fn env_var_sets_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let emb = fixture("three_blobs.emb");
    let o = Command::new(BIN)
        .args(["cluster", "--embeddings", emb.to_str().unwrap()])
        .env("PEERINFO_OUT", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(json(&dir.path().join("cluster_report.json"))["k"], 3);
}

#[test]
fn validation_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "worker_id,scenario,bin,prefer_info,wtp_cents\nw1,exante,1,1,51\n").unwrap();
    let o = run(&["classify", "--schedules", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[population]\nn = 0\n").unwrap();
    assert_eq!(run(&["simulate", "--config", cfg.to_str().unwrap()], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["cluster"], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["cluster", "--embeddings", "/nonexistent.emb"], dir.path()).status.code(), Some(1));
}
