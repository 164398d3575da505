//! End-to-end runs of the `spinblock` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spinblock::linalg::LinalgError;
use spinblock_cli::{cmd_compare, read_register, CliError, GridSpec, StageArg, SweepJob};

fn register_file(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../registers").join(name)
}

fn spinblock(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinblock")).args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = spinblock(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn sweep_csv_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = register_file("c3_c16.toml");
    let mut files = Vec::new();
    for workers in ["1", "8"] {
        let out = dir.path().join(format!("sweep_{workers}.csv"));
        run_ok(&[
            "sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(),
            "--t-start", "6.6", "--t-stop", "7.4", "--steps", "41", "--reps", "5", "--workers", workers,
        ]);
        files.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let text = String::from_utf8(files.remove(0)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("T_us,tau_us,spin_label,polarisation,n_p,repetitions"));
    assert_eq!(lines.count(), 41 * 2);
}

#[test]
fn sweep_conventions_rescale_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = register_file("reference_c3.toml");
    let read = |extra: &[&str], name: &str| -> f64 {
        let out = dir.path().join(name);
        let mut args = vec!["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--t-start", "6.848", "--t-stop", "6.85", "--steps", "2"];
        args.extend_from_slice(extra);
        run_ok(&args);
        let text = std::fs::read_to_string(out).unwrap();
        text.lines().nth(1).unwrap().split(',').nth(3).unwrap().parse().unwrap()
    };
    let plain = read(&[], "a.csv");
    assert!(plain > 0.4);
    assert!((read(&["--flip-sign"], "b.csv") + plain).abs() < 1e-15);
    assert!((read(&["--full-scale"], "c.csv") - 2.0 * plain).abs() < 1e-15);
}

#[test]
fn spectrum_writes_branches_and_crossings() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("spec.csv");
    let cfg = register_file("reference_c3.toml");
    let stdout = run_ok(&[
        "spectrum", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(),
        "--t-start", "6.5", "--t-stop", "7.2", "--steps", "141",
    ]);
    assert!(stdout.starts_with("1 avoided crossing"), "{stdout}");
    let spectrum = std::fs::read_to_string(&out).unwrap();
    assert!(spectrum.starts_with("T_us,tau_us,branch_index,eigenphase_rad\n"));
    let crossings = std::fs::read_to_string(dir.path().join("spec_crossings.csv")).unwrap();
    assert_eq!(crossings.lines().count(), 2);
    assert!(crossings.lines().nth(1).unwrap().contains("C3"));
}

#[test]
fn schedule_logs_every_repetition() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sched.csv");
    let cfg = register_file("c3_c16.toml");
    let stdout = run_ok(&[
        "schedule", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--np", "8",
        "--stage", "7.344:20", "--stage", "6.798:30",
    ]);
    assert!(stdout.contains("C16"));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("stage_index,T_us,tau_us,repetition,cumulative_time_us,spin_label,polarisation,n_p"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 50 * 2);
    assert_eq!(rows[40][0], "1");
    let times: Vec<f64> = rows.iter().map(|r| r[4].parse().unwrap()).collect();
    assert!(times.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn compare_reports_blockade_shift() {
    let stdout = run_ok(&[
        "compare", "--config", register_file("c3_c16.toml").to_str().unwrap(), "--out", "/dev/null",
        "--t-start", "6.2", "--t-stop", "7.8", "--steps", "161", "--reps", "100",
    ]);
    assert!(stdout.contains("C16") && stdout.contains("C3"), "{stdout}");
}

#[test]
fn compare_library_call_finds_displaced_peak() {
    let dir = tempfile::tempdir().unwrap();
    let reg = read_register(&register_file("c3_c16.toml")).unwrap();
    let mut job = SweepJob::new(reg, GridSpec { start: 6.2, stop: 7.8, steps: 161 }, dir.path().join("cmp.csv"));
    job.repetitions = 100;
    let report = cmd_compare(&job, None).unwrap();
    assert_eq!(report.blockade, "C3");
    let row = report.row("C16").unwrap();
    let (pred, num) = (row.predicted_shift().unwrap(), row.numeric_shift().unwrap());
    assert!(pred > 0.0 && num > 0.0);
    assert!((num - pred).abs() < 0.2 * pred, "{num} vs {pred}");
    let own = report.row("C3").unwrap();
    assert!(own.is_blockade && own.predicted_shift().is_none());
    assert!(own.numeric_shift().unwrap().abs() < 0.02);
}

#[test]
fn bad_inputs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let missing = spinblock(&["sweep", "--config", "/nonexistent/reg.toml", "--out", out.to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent/reg.toml"));

    let cfg = register_file("reference_c3.toml");
    let bad_grid = spinblock(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--t-start", "8", "--t-stop", "6"]);
    assert_eq!(bad_grid.status.code(), Some(1));

    let zero_workers = spinblock(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", "0"]);
    assert_eq!(zero_workers.status.code(), Some(1));

    let broken = dir.path().join("broken.toml");
    std::fs::write(&broken, "[[nuclei]]\nlabel = \"a\"\na_parallel_khz = \"oops\"\n").unwrap();
    let parse = spinblock(&["sweep", "--config", broken.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(parse.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn numerical_failures_map_to_two() {
    let e = CliError::Model(spinblock::Error::Linalg(LinalgError::NonFinite("test")));
    assert_eq!(e.exit_code(), 2);
    assert_eq!(CliError::Validation("x".into()).exit_code(), 1);
}

#[test]
fn stage_arguments_parse() {
    assert_eq!("7.41:200".parse::<StageArg>().unwrap(), StageArg { period: 7.41, repetitions: 200 });
    for bad in ["7.41", "x:3", "7:0", "-1:5", "7:-2"] {
        assert!(bad.parse::<StageArg>().is_err(), "{bad}");
    }
}
