//! End-to-end tests of the `ownlab` binary: exit codes, gating, record
//! output, and emitted files.

use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(format!("{name}.own"))
}

fn ownlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ownlab"))
        .args(args)
        .env("NO_COLOR", "1")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn check_rejects_loan_conflict_with_both_groups() {
    let out = ownlab(&["check", corpus("loan_conflict").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("== access model =="), "{text}");
    assert!(text.contains("borrow conflict"), "{text}");
    assert!(text.contains("== permissions model =="), "{text}");
    assert!(text.contains("permission error"), "{text}");
}

#[test]
fn check_accepts_clean_program() {
    let out = ownlab(&["check", corpus("trivial_return").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn check_single_model_selection() {
    let out =
        ownlab(&["check", corpus("loan_conflict").to_str().unwrap(), "--model", "polonius"]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("access model"));
    assert!(!text.contains("permissions model"));
}

#[test]
fn check_records_have_schema() {
    let out = ownlab(&[
        "check",
        corpus("loan_conflict").to_str().unwrap(),
        "--format",
        "records",
    ]);
    assert_eq!(out.status.code(), Some(1));
    for line in stdout(&out).lines() {
        let v: serde_json::Value = serde_json::from_str(line).expect("valid json line");
        assert_eq!(v["schema"], "ownlab.diag/1");
        assert!(v["kind"].is_string());
    }
}

#[test]
fn run_is_gated_and_hints_at_the_flag() {
    let out = ownlab(&["run", corpus("use_after_free").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("--ignore-borrowck"), "{err}");
}

#[test]
fn counterfactual_run_reports_ub_with_exit_2() {
    let out =
        ownlab(&["run", corpus("use_after_free").to_str().unwrap(), "--ignore-borrowck"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("use-after-free"));
}

#[test]
fn accepted_program_runs_with_exit_0() {
    let out = ownlab(&["run", corpus("trivial_return").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("terminated: 0"));
}

#[test]
fn step_limit_is_exit_3() {
    let out = ownlab(&[
        "run",
        corpus("infinite_loop").to_str().unwrap(),
        "--max-steps",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bad_flags_are_exit_64() {
    let out = ownlab(&["--definitely-not-a-flag"]);
    assert_eq!(out.status.code(), Some(64));
    let out = ownlab(&["run"]);
    assert_eq!(out.status.code(), Some(64), "missing input is a usage error");
}

#[test]
fn parse_errors_are_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.own");
    std::fs::write(&bad, "fn main( {").unwrap();
    let out = ownlab(&["check", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn trace_records_round_trip_the_schema() {
    let out = ownlab(&[
        "trace",
        corpus("double_free_move").to_str().unwrap(),
        "--ignore-borrowck",
        "--format",
        "records",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let text = stdout(&out);
    let mut steps = 0;
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).expect("valid json line");
        if v["schema"] == "ownlab.trace/1" {
            steps += 1;
            assert!(v["instr"].is_string());
            assert!(v["stack_depth"].is_u64());
        }
    }
    assert!(steps >= 4, "expected several step records:\n{text}");
}

#[test]
fn trace_marks_select_states() {
    let out = ownlab(&[
        "trace",
        corpus("use_after_free").to_str().unwrap(),
        "--ignore-borrowck",
        "--marks",
        "main:1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let text = stdout(&out);
    assert!(text.contains("state main:1"));
    assert!(!text.contains("state main:0"));
}

#[test]
fn perms_emits_records() {
    let out = ownlab(&[
        "perms",
        corpus("box_borrow_steps").to_str().unwrap(),
        "--format",
        "records",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let kinds: Vec<String> = text
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["kind"]
            .as_str()
            .unwrap()
            .to_string())
        .collect();
    assert!(kinds.iter().any(|k| k == "perm-state"));
    assert!(kinds.iter().any(|k| k == "perm-step"));
    assert!(kinds.iter().any(|k| k == "mark"));
}

#[test]
fn render_writes_all_formats() {
    let dir = tempfile::tempdir().unwrap();
    let out = ownlab(&[
        "render",
        corpus("call_shared_read").to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    for stem in ["memory_trace", "steps_main", "steps_get", "listing"] {
        for ext in ["txt", "svg", "html"] {
            let path = dir.path().join(format!("{stem}.{ext}"));
            assert!(path.exists(), "missing {}", path.display());
        }
    }
    // Determinism across separate processes.
    let dir2 = tempfile::tempdir().unwrap();
    let out = ownlab(&[
        "render",
        corpus("call_shared_read").to_str().unwrap(),
        "--out-dir",
        dir2.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let a = std::fs::read(dir.path().join("memory_trace.svg")).unwrap();
    let b = std::fs::read(dir2.path().join("memory_trace.svg")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn fuzz_exit_0_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = ownlab(&[
        "fuzz",
        "--seed",
        "3",
        "--count",
        "40",
        "--property",
        "theorem",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("violations: 0"));
    assert!(dir.path().join("report.json").exists());
}
