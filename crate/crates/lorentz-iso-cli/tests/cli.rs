//! End-to-end tests of the command-line interface, driving the compiled
//! binary exactly as a user would.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lorentz-iso"))
}

fn workdir(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    if dir.exists() {
        fs::remove_dir_all(&dir).expect("clear stale test dir");
    }
    fs::create_dir_all(&dir).expect("create test dir");
    dir
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn verify_polar_isothermic_on_torus_passes() {
    let dir = workdir("verify-polar");
    let output = bin()
        .args([
            "verify",
            "--surface",
            "torus:t=2",
            "--grid",
            "64x64",
            "--theorem",
            "polar-isothermic",
            "--out",
        ])
        .arg(&dir)
        .output()
        .expect("run binary");
    assert_eq!(
        output.status.code(),
        Some(0),
        "stdout:\n{}\nstderr:\n{}",
        stdout(&output),
        stderr(&output)
    );
    assert!(stdout(&output).contains("verdict: pass"));

    let report = fs::read_to_string(dir.join("report.json")).expect("report.json written");
    assert!(report.contains("\"verdict\": \"pass\""));
    assert!(report.contains("\"theorem_id\": \"polar-isothermic\""));
    assert!(report.contains("\"schema_version\": 1"));
}

#[test]
fn spectral_chart_is_null_to_tolerance() {
    let dir = workdir("transform-spectral");
    let output = bin()
        .args(["transform", "--surface", "torus:t=2", "--spectral", "c=1", "--out"])
        .arg(&dir)
        .output()
        .expect("run binary");
    assert_eq!(output.status.code(), Some(0), "stderr:\n{}", stderr(&output));

    let csv = fs::read_to_string(dir.join("spectral.csv")).expect("spectral.csv written");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("u,v,x1,x2,x3,x4,x5,x6"));
    let mut rows = 0;
    let mut worst: f64 = 0.0;
    for line in lines {
        let x: Vec<f64> = line
            .split(',')
            .skip(2)
            .map(|t| t.parse().expect("numeric field"))
            .collect();
        assert_eq!(x.len(), 6);
        let q = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]
            - x[4] * x[4]
            - x[5] * x[5];
        worst = worst.max(q.abs());
        rows += 1;
    }
    assert_eq!(rows, 64 * 64);
    assert!(worst < 1e-8, "deformed lift leaves the light cone: {worst:e}");
}

#[test]
fn non_null_csv_rows_fail_with_line_number() {
    let dir = workdir("garbage-csv");
    let path = dir.join("garbage.csv");
    fs::write(
        &path,
        "u,v,x1,x2,x3,x4,x5,x6\n\
         0,0,1,0,0,0,0,0\n\
         0,1,1,0,0,0,0,0\n\
         1,0,1,0,0,0,0,0\n\
         1,1,1,0,0,0,0,0\n",
    )
    .expect("write garbage csv");

    let output = bin()
        .args(["verify", "--surface"])
        .arg(format!("csv:{}", path.display()))
        .output()
        .expect("run binary");
    assert_eq!(output.status.code(), Some(1));
    let err = stderr(&output);
    assert!(err.contains("line 2"), "diagnostic lacks line number: {err}");
    assert!(err.contains("light cone"), "diagnostic lacks cause: {err}");
}

#[test]
fn reports_are_byte_stable_across_runs() {
    let run = |name: &str| {
        let dir = workdir(name);
        let output = bin()
            .args([
                "verify",
                "--surface",
                "torus:t=2",
                "--grid",
                "16x16",
                "--theorem",
                "duality",
                "--out",
            ])
            .arg(&dir)
            .output()
            .expect("run binary");
        assert_eq!(output.status.code(), Some(0), "stderr:\n{}", stderr(&output));
        fs::read_to_string(dir.join("report.json")).expect("report written")
    };
    let strip_runtime = |text: String| -> String {
        text.lines()
            .filter(|l| !l.contains("runtime_ms"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let first = strip_runtime(run("determinism-a"));
    let second = strip_runtime(run("determinism-b"));
    assert_eq!(first, second, "reports differ between identical runs");
}

#[test]
fn undersized_grids_are_rejected() {
    let output = bin()
        .args(["verify", "--surface", "torus:t=2", "--grid", "4x64"])
        .output()
        .expect("run binary");
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr(&output).contains("at least 8x8"));
}

#[test]
fn failed_verification_exits_with_code_two() {
    // Below double precision no residual can pass, so the verification runs
    // and its checks fail.
    let dir = workdir("verify-fail");
    let output = bin()
        .args([
            "verify",
            "--surface",
            "torus:t=2",
            "--grid",
            "16x16",
            "--theorem",
            "duality",
            "--tol",
            "1e-18",
            "--out",
        ])
        .arg(&dir)
        .output()
        .expect("run binary");
    assert_eq!(
        output.status.code(),
        Some(2),
        "stdout:\n{}\nstderr:\n{}",
        stdout(&output),
        stderr(&output)
    );
    assert!(stdout(&output).contains("verdict: fail"));
    let report = fs::read_to_string(dir.join("report.json")).expect("report written");
    assert!(report.contains("\"verdict\": \"fail\""));
}

#[test]
fn config_file_drives_runs_and_flags_override_it() {
    let dir = workdir("config-merge");
    let config = dir.join("run.cfg");
    fs::write(
        &config,
        "# reference configuration\n\
         surface = torus:t=2\n\
         grid = 16x16\n\
         theorem = duality\n\
         tol = 1e-5\n",
    )
    .expect("write config");

    let output = bin()
        .args(["verify", "--config"])
        .arg(&config)
        .args(["--grid", "12x12", "--out"])
        .arg(&dir)
        .output()
        .expect("run binary");
    assert_eq!(output.status.code(), Some(0), "stderr:\n{}", stderr(&output));

    let report = fs::read_to_string(dir.join("report.json")).expect("report written");
    assert!(report.contains("\"theorem_id\": \"duality\""), "config theorem used");
    assert!(report.contains("\"grid\": \"12x12\""), "flag overrides config grid");
    assert!(report.contains("\"tol\": \"1e-5\""), "config tolerance used");
}

#[test]
fn example_charts_round_trip_through_the_sampled_pipeline() {
    let dir = workdir("examples-roundtrip");
    let output = bin().args(["examples", "--out"]).arg(&dir).output().expect("run binary");
    assert_eq!(output.status.code(), Some(0), "stderr:\n{}", stderr(&output));
    assert!(dir.join("torus.csv").exists());
    assert!(dir.join("rotational.csv").exists());

    let output = bin()
        .args(["frame", "--surface"])
        .arg(format!("csv:{}", dir.join("torus.csv").display()))
        .arg("--out")
        .arg(&dir)
        .output()
        .expect("run binary");
    assert_eq!(output.status.code(), Some(0), "stderr:\n{}", stderr(&output));

    let invariants = fs::read_to_string(dir.join("invariants.csv")).expect("invariants written");
    assert!(invariants.starts_with("u,v,Re_s,Im_s,"));
    assert_eq!(invariants.lines().count(), 1 + 16 * 16);
}
