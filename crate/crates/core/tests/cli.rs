use std::path::Path;
use std::process::Command;

use semitrotter::experiments::{read_csv, CSV_HEADER};

fn semitrotter(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_semitrotter"))
        .args(args)
        .env("SEMITROTTER_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn dt_sweep_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.cfg",
        "N = 16\nh = 1/16\ndt = 1/4, 1/8, 1/16\norders = 1, 2\n",
    );
    let out = dir.path().join("out");
    let res = semitrotter(&["dt-sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let csv = std::fs::read_to_string(out.join("dt-sweep.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), CSV_HEADER.join(","));
    let rows = read_csv(&out.join("dt-sweep.csv")).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 3);
    let svg = std::fs::read_to_string(out.join("dt-sweep.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 4);
    assert!(String::from_utf8_lossy(&res.stdout).contains("slope"));

    // Same config, same bytes.
    let again = dir.path().join("again");
    assert!(semitrotter(&[
        "dt-sweep",
        "--config",
        &cfg,
        "--out",
        again.to_str().unwrap()
    ])
    .status
    .success());
    assert_eq!(
        csv,
        std::fs::read_to_string(again.join("dt-sweep.csv")).unwrap()
    );
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for text in ["dt = 0.3\n", "unknown = 1\n", "experiment = beta\n"] {
        let cfg = write(dir.path(), "bad.cfg", text);
        let res = semitrotter(&["dt-sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(res.status.code(), Some(2), "{text}");
        assert!(String::from_utf8_lossy(&res.stderr).contains("error"));
    }
    let missing = dir.path().join("nope.cfg");
    let res = semitrotter(&["beta", "--config", missing.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn bad_thread_cap_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "b.cfg", "h = 1/16\n");
    let res = Command::new(env!("CARGO_BIN_EXE_semitrotter"))
        .args([
            "beta",
            "--config",
            &cfg,
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .env("SEMITROTTER_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn verify_symbolic_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "v.cfg", "trials = 100\nseed = 42\n");
    let res = semitrotter(&[
        "verify-symbolic",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(res.status.success());
    assert!(String::from_utf8_lossy(&res.stdout).contains("PASS"));
}

#[test]
fn comm_sweep_with_custom_words() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.cfg",
        "h = 1/16, 1/32\nwords = [A,B], \"[B,[A,O]]\"\n",
    );
    let res = semitrotter(&[
        "comm-sweep",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let rows = read_csv(&dir.path().join("comm-sweep.csv")).unwrap();
    assert_eq!(rows.len(), 2 * 3);
    assert!(rows.iter().any(|r| r.metric == "[B,[A,O]]"));
}
