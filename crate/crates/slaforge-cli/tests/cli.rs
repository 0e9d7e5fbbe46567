//! End-to-end CLI behavior through the compiled binary: exit codes,
//! artifact files, replay timing preservation and byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use slaforge_core::dsl::builtin;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_slaforge")
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("sla.json"),
            r#"{"metric":"fas.200","latency_bound_ms":200,"compliance":"995/1000"}"#,
        )
        .unwrap();
        std::fs::write(
            dir.path().join("degradation.view"),
            builtin::degradation_view_source(),
        )
        .unwrap();
        std::fs::write(
            dir.path().join("degradation.metric"),
            builtin::degradation_grammar_source(200),
        )
        .unwrap();
        Fixture { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn arg(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

#[test]
fn negotiate_exit_codes_follow_feasibility() {
    let fx = Fixture::new();
    let out = run(&[
        "negotiate", "--sla", &fx.arg("sla.json"), "--cost", "4", "--ecu", "10",
        "-n", "2", "--out", &fx.arg("neg"),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("FEASIBLE"));
    assert!(fx.path("neg/report.json").exists());
    assert!(fx.path("neg/report.txt").exists());

    let out = run(&[
        "negotiate", "--sla", &fx.arg("sla.json"), "--cost", "4", "--ecu", "10", "-n", "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("suggestion:"));
}

#[test]
fn malformed_sla_exits_nonzero_with_line() {
    let fx = Fixture::new();
    std::fs::write(fx.path("bad.json"), "{\n  \"metric\": oops\n}").unwrap();
    let out = run(&[
        "negotiate", "--sla", &fx.arg("bad.json"), "--cost", "4", "--ecu", "10", "-n", "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "stderr: {err}");
}

#[test]
fn simulate_writes_all_artifacts() {
    let fx = Fixture::new();
    let out_dir = fx.arg("run");
    let out = run(&[
        "simulate", "--view", &fx.arg("degradation.view"),
        "--grammar", &fx.arg("degradation.metric"),
        "--ecu", "40", "-n", "1", "--rate", "5", "--duration-ms", "3000",
        "--cost", "4", "--seed", "3", "--out", &out_dir,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    for name in [
        "trace.jsonl",
        "telemetry.csv",
        "metric_history.jsonl",
        "decisions.jsonl",
        "summary.json",
    ] {
        assert!(fx.path("run").join(name).exists(), "missing {name}");
    }
    let report = run(&["report", "--out", &out_dir]);
    assert_eq!(report.status.code(), Some(0));
    assert!(stdout(&report).contains("final fas.200"));
}

#[test]
fn combined_sla_metric_file_works() {
    let fx = Fixture::new();
    let combined = format!(
        "{}\n{}",
        builtin::degradation_view_source(),
        builtin::degradation_grammar_source(200)
    );
    std::fs::write(fx.path("combined.sla-metric"), combined).unwrap();
    let out = run(&[
        "simulate", "--metric", &fx.arg("combined.sla-metric"),
        "--ecu", "40", "-n", "1", "--rate", "2", "--duration-ms", "2000",
        "--cost", "4", "--out", &fx.arg("comb"),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("fas.200"));
}

#[test]
fn replay_preserves_recorded_timings_exactly() {
    let fx = Fixture::new();
    std::fs::write(
        fx.path("arrivals.jsonl"),
        "{\"time_ms\":0,\"cost\":4}\n{\"time_ms\":50,\"cost\":4}\n{\"time_ms\":50,\"cost\":4}\n{\"time_ms\":120,\"cost\":4}\n",
    )
    .unwrap();
    let out = run(&[
        "replay", "--view", &fx.arg("degradation.view"),
        "--grammar", &fx.arg("degradation.metric"),
        "--ecu", "400", "-n", "1", "--log", &fx.arg("arrivals.jsonl"),
        "--out", &fx.arg("rep"),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let trace = std::fs::read_to_string(fx.path("rep/trace.jsonl")).unwrap();
    let times: Vec<i64> = trace
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["time_ms"]
            .as_i64()
            .unwrap())
        .collect();
    assert_eq!(times, vec![0, 50, 50, 120]);
}

#[test]
fn replay_proc_time_log_computes_degradation() {
    let fx = Fixture::new();
    std::fs::write(
        fx.path("measured.jsonl"),
        "{\"time_ms\":0,\"proc_time_ms\":100}\n{\"time_ms\":10,\"proc_time_ms\":150}\n{\"time_ms\":20,\"proc_time_ms\":199}\n",
    )
    .unwrap();
    let out = run(&[
        "replay", "--view", &fx.arg("degradation.view"),
        "--grammar", &fx.arg("degradation.metric"),
        "--log", &fx.arg("measured.jsonl"), "--out", &fx.arg("rep2"),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("fas.200 = 0/1"));
}

#[test]
fn replay_empty_log_is_empty_success() {
    let fx = Fixture::new();
    std::fs::write(fx.path("empty.jsonl"), "").unwrap();
    let out = run(&[
        "replay", "--view", &fx.arg("degradation.view"),
        "--grammar", &fx.arg("degradation.metric"),
        "--log", &fx.arg("empty.jsonl"), "--out", &fx.arg("rep3"),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let trace = std::fs::read_to_string(fx.path("rep3/trace.jsonl")).unwrap();
    assert!(trace.is_empty());
}

#[test]
fn malformed_log_line_is_reported_with_number() {
    let fx = Fixture::new();
    std::fs::write(
        fx.path("bad.jsonl"),
        "{\"time_ms\":0,\"cost\":4}\nnot json at all\n",
    )
    .unwrap();
    let out = run(&[
        "replay", "--view", &fx.arg("degradation.view"),
        "--grammar", &fx.arg("degradation.metric"),
        "--ecu", "40", "-n", "1", "--log", &fx.arg("bad.jsonl"), "--out", &fx.arg("rep4"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "stderr: {err}");
}

#[test]
fn identical_runs_produce_identical_bytes() {
    let fx = Fixture::new();
    let args = |out: &str| {
        vec![
            "simulate".to_string(),
            "--view".into(), fx.arg("degradation.view"),
            "--grammar".into(), fx.arg("degradation.metric"),
            "--ecu".into(), "40".into(), "-n".into(), "1".into(),
            "--rate".into(), "9".into(), "--duration-ms".into(), "4000".into(),
            "--cost".into(), "4".into(), "--seed".into(), "12".into(),
            "--out".into(), fx.arg(out),
        ]
    };
    let a = Command::new(bin()).args(args("a")).output().unwrap();
    let b = Command::new(bin()).args(args("b")).output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    for name in [
        "trace.jsonl",
        "telemetry.csv",
        "metric_history.jsonl",
        "decisions.jsonl",
        "summary.json",
    ] {
        let fa = std::fs::read(Path::new(&fx.arg("a")).join(name)).unwrap();
        let fb = std::fs::read(Path::new(&fx.arg("b")).join(name)).unwrap();
        assert_eq!(fa, fb, "artifact {name} differs between identical runs");
    }
}
