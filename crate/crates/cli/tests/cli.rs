use std::path::Path;
use std::process::{Command, Output};

fn limitgen(args: &[&str], dir: &Path, seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_limitgen"));
    cmd.args(args).current_dir(dir).env_remove("LIMITGEN_SEED");
    if let Some(s) = seed {
        cmd.env("LIMITGEN_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL: &str = r#"
schema = "limitgen-scenario/1"
name = "small"
claim = "vanishing-noise-generation"
horizon = 400
seed = 5
languages {
  E = multiples(2)
  N = nat
}
collection = [E, N]
target = E
stream { main = E, noise = pow2(from = N), shuffle = 4 }
generator = vanishing_noise
expect = [generates]
"#;

#[test]
fn run_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.scn"), SMALL).unwrap();
    let o = limitgen(&["run", "small.scn", "--out", "o"], dir.path(), None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("PASS generates"));
    let trace = std::fs::read_to_string(dir.path().join("o/small.trace.jsonl")).unwrap();
    assert_eq!(trace.lines().count(), 401);
    assert!(trace.starts_with("{\"schema\":\"limitgen-trace/1\""));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/small.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 5);
    assert_eq!(summary["pass"], true);
}

#[test]
fn seed_from_environment_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.scn"), SMALL).unwrap();
    let o = limitgen(&["run", "small.scn", "--out", "a"], dir.path(), Some("99"));
    assert!(o.status.success());
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/small.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 99);
    let b = limitgen(&["run", "small.scn", "--out", "b"], dir.path(), None);
    assert!(b.status.success());
    let ta = std::fs::read(dir.path().join("a/small.trace.jsonl")).unwrap();
    let tb = std::fs::read(dir.path().join("b/small.trace.jsonl")).unwrap();
    assert_ne!(ta, tb);
    let bad = limitgen(&["validate", "small.scn"], dir.path(), Some("x"));
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn validate_reports_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.scn"), SMALL.replace("pow2(from = N)", "pow3(from = N)")).unwrap();
    let o = limitgen(&["validate", "bad.scn"], dir.path(), None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 13"), "{}", String::from_utf8_lossy(&o.stderr));
    let ok = limitgen(&["validate", "vanishing_basic"], dir.path(), None);
    assert!(ok.status.success());
    assert!(stdout(&ok).starts_with("ok: vanishing_basic"));
}

#[test]
fn plot_emits_versioned_csv() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.scn"), SMALL).unwrap();
    assert!(limitgen(&["run", "small.scn", "--out", "o"], dir.path(), None).status.success());
    let o = limitgen(&["plot", "o/small.trace.jsonl", "--kind", "noise-rate"], dir.path(), None);
    assert!(o.status.success());
    let csv = stdout(&o);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "# limitgen-plot/1 noise-rate");
    assert_eq!(lines[1], "n,rate");
    assert_eq!(lines.len(), 402);
    let bogus = limitgen(&["plot", "o/small.trace.jsonl", "--kind", "bogus"], dir.path(), None);
    assert!(!bogus.status.success());
}

#[test]
fn suite_filter_runs_matching_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let o = limitgen(&["suite", "--filter", "index-based", "--horizon", "40", "--out", "s"], dir.path(), None);
    assert!(o.status.success(), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("PASS index_failure_noise"));
    assert!(out.contains("PASS index_failure_omission"));
    assert!(out.ends_with("2/2 scenarios passed\n"));
    assert!(dir.path().join("s/index_failure_noise.trace.jsonl").exists());
    let none = limitgen(&["suite", "--filter", "no-such-claim"], dir.path(), None);
    assert_eq!(none.status.code(), Some(2));
}
