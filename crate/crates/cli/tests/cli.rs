use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lethargy::scenario::{Report, Verdict};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lethargy"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/scenarios").join(name)
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lethargy-cli-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn demo_exits_zero() {
    let out = bin().arg("demo").output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(code(&out), 0, "{stdout}");
    assert!(stdout.contains("0 mismatch(es)"));
}

#[test]
fn construct_writes_a_reparsable_report() {
    let dir = scratch_dir("construct");
    let path = dir.join("r.json");
    let out = bin()
        .args(["construct", "--format", "json", "--output"])
        .arg(&path)
        .arg(scenario("hilbert_coordinate.toml"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let written = std::fs::read_to_string(&path).unwrap();
    let report = Report::from_json(&written).unwrap();
    assert_eq!(report.verdict, Verdict::Pass);
    assert!(report.levels.iter().all(|l| l.residual <= 1e-6));
    let printed = Report::from_json(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(printed, report);
}

#[test]
fn failing_condition_exits_one() {
    let out = bin().arg("check").arg(scenario("geometric_half_fails.toml")).output().unwrap();
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn bad_input_exits_two() {
    let dir = scratch_dir("bad");
    let path = dir.join("increasing.toml");
    let text = std::fs::read_to_string(scenario("hilbert_coordinate.toml"))
        .unwrap()
        .replace("[0.5, 0.2]", "[0.2, 0.5]");
    std::fs::write(&path, text).unwrap();
    let out = bin().arg("construct").arg(&path).output().unwrap();
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-increasing"));

    let out = bin().arg("construct").arg(dir.join("missing.toml")).output().unwrap();
    assert_eq!(code(&out), 2);
    let out = bin().arg("construct").arg(scenario("dense_union.toml")).output().unwrap();
    assert_eq!(code(&out), 2);
    let out = bin().arg("construct").arg(scenario("geometric_sequence.toml")).output().unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn sequence_report_has_difference_matrix() {
    let out = bin()
        .args(["sequence", "--n-max", "4", "--format", "json"])
        .arg(scenario("geometric_sequence.toml"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let r = Report::from_json(&String::from_utf8_lossy(&out.stdout)).unwrap();
    let st = r.stabilization.unwrap();
    assert_eq!(st.differences.len(), 4);
    assert!(st.differences.iter().all(|row| row.len() == 4));
}

#[test]
fn same_seed_gives_identical_reports() {
    let runs: Vec<Vec<u8>> = (0..2)
        .map(|_| {
            bin()
                .args(["check", "--seed", "11", "--format", "json"])
                .arg(scenario("step_span_condition.toml"))
                .output()
                .unwrap()
                .stdout
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    let r = Report::from_json(&String::from_utf8_lossy(&runs[0])).unwrap();
    assert_eq!(r.seed, 11);
    assert!(r.wall_time_ms.is_none());
}

#[test]
fn timing_flag_adds_wall_time() {
    let out = bin()
        .args(["construct", "--timing", "--format", "json"])
        .arg(scenario("hilbert_ties.toml"))
        .output()
        .unwrap();
    let r = Report::from_json(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert!(r.wall_time_ms.is_some());
}

#[test]
fn tolerance_override_is_validated() {
    let out = bin()
        .args(["construct", "--tol", "-1"])
        .arg(scenario("hilbert_coordinate.toml"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}
