//! End-to-end tests of the binary: exit codes, file outputs, overrides,
//! and the hidden fault-injection hook.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_drgfmd"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("drgfmd-cli-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("exp.conf");
    std::fs::write(&path, body).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary launches")
}

#[test]
fn run_writes_csv_and_svg_and_exits_zero() {
    let dir = temp_dir("run");
    let config = write_config(
        &dir,
        &format!(
            "problem.dimension = 2\nalgorithm.horizon = 300\ntrials.count = 2\noutput.dir = {}\n",
            dir.join("out").display()
        ),
    );
    let out = run(binary().arg("run").arg(&config));
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(dir.join("out/run.csv").exists());
    assert!(dir.join("out/run.svg").exists());
    let csv = std::fs::read_to_string(dir.join("out/run.csv")).unwrap();
    assert!(csv.starts_with("config_fingerprint,suite,trial,t,agent,"));
}

#[test]
fn rerun_is_byte_identical() {
    let dir = temp_dir("determinism");
    let config = write_config(
        &dir,
        &format!(
            "algorithm.horizon = 400\ntrials.count = 3\noutput.dir = {}\n",
            dir.join("out").display()
        ),
    );
    run(binary().arg("run").arg(&config));
    let first = std::fs::read(dir.join("out/run.csv")).unwrap();
    run(binary().arg("run").arg(&config));
    let second = std::fs::read(dir.join("out/run.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn unknown_key_exits_two_naming_it() {
    let dir = temp_dir("badkey");
    let config = write_config(&dir, "stepsize_type = sqrt\n");
    let out = run(binary().arg("run").arg(&config));
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("stepsize_type"), "{stderr}");
}

#[test]
fn invalid_value_exits_two_naming_the_key() {
    let dir = temp_dir("badvalue");
    let config = write_config(&dir, "network.radius = 9.0\n");
    let out = run(binary().arg("run").arg(&config));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("network.radius"));
}

#[test]
fn missing_config_file_exits_two() {
    let out = run(binary().arg("run").arg("/nonexistent/path.conf"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_three() {
    let dir = temp_dir("unwritable");
    let config = write_config(
        &dir,
        "algorithm.horizon = 10\ntrials.count = 1\noutput.dir = /dev/null/nope\n",
    );
    let out = run(binary().arg("run").arg(&config));
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}

#[test]
fn trials_and_seed_overrides_apply() {
    let dir = temp_dir("overrides");
    let config = write_config(
        &dir,
        &format!(
            "algorithm.horizon = 200\ntrials.count = 4\noutput.dir = {}\n",
            dir.join("out").display()
        ),
    );
    let out = run(binary()
        .arg("--trials")
        .arg("2")
        .arg("--seed")
        .arg("55")
        .arg("run")
        .arg(&config));
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.join("out/run.csv")).unwrap();
    let trials: std::collections::BTreeSet<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap())
        .filter(|t| !t.is_empty())
        .collect();
    assert_eq!(trials.len(), 2, "expected exactly trials 0 and 1");
    // A different seed changes the numbers.
    let out = run(binary()
        .arg("--trials")
        .arg("2")
        .arg("--seed")
        .arg("56")
        .arg("run")
        .arg(&config));
    assert_eq!(out.status.code(), Some(0));
    let csv2 = std::fs::read_to_string(dir.join("out/run.csv")).unwrap();
    assert_ne!(csv, csv2);
}

#[test]
fn verify_passes_clean_and_fails_under_injected_fault() {
    let out = run(&mut binary().arg("verify"));
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS          netgraph/metropolis-doubly-stochastic"));
    assert!(!stdout.contains("FAIL"));

    let out = run(binary()
        .env("DRGFMD_FAULT", "metropolis-row-sum")
        .arg("verify"));
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("FAIL          netgraph/metropolis-doubly-stochastic"),
        "{stdout}"
    );
}

#[test]
fn verify_report_is_stable() {
    let a = run(&mut binary().arg("verify"));
    let b = run(&mut binary().arg("verify"));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn unknown_suite_exits_two() {
    let out = run(binary().arg("suite").arg("warp-drive"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warp-drive"));
}

#[test]
fn suite_writes_tagged_files() {
    let dir = temp_dir("suite");
    let out = run(binary()
        .arg("--trials")
        .arg("2")
        .arg("suite")
        .arg("delta-sweep")
        .arg("--out")
        .arg(&dir));
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    for delta in ["0.3", "0.4", "0.5"] {
        assert!(dir.join(format!("delta-sweep-delta{delta}.csv")).exists());
        assert!(dir.join(format!("delta-sweep-delta{delta}.svg")).exists());
    }
}
