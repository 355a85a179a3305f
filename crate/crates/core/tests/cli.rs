//! End-to-end checks of the `sim` binary: exit codes and output files.

use std::path::PathBuf;
use std::process::{Command, Output};

fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(rel)
}

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sim"))
        .args(args)
        .output()
        .expect("sim binary runs")
}

fn run_oval(extra: &[&str], out: &std::path::Path) -> Output {
    let (v, t, l) = (data("vehicle.json"), data("tracks/oval.csv"), data("laps/oval_060.csv"));
    let mut args = vec![
        "run",
        "--vehicle",
        v.to_str().unwrap(),
        "--track",
        t.to_str().unwrap(),
        "--lap",
        l.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    sim(&args)
}

fn result(out: &std::path::Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("result.json")).unwrap()).unwrap()
}

#[test]
fn baseline_oval_lap_completes_with_small_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_oval(&[], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = result(dir.path());
    assert_eq!(r["completed"], true);
    let d_max = r["d_max"].as_f64().unwrap();
    assert!(d_max > 0.0 && d_max < 0.5, "d_max {d_max}");
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("s_m,d_m\n"));
    assert!(dir.path().join("ticks.csv").exists());
}

#[test]
fn stalled_and_off_track_runs_are_results_not_faults() {
    for (scale, failure) in [("0.001", "stalled"), ("1.6", "off track")] {
        let dir = tempfile::tempdir().unwrap();
        let o = run_oval(&["--scale", scale], dir.path());
        assert!(o.status.success(), "scale {scale}: {}", String::from_utf8_lossy(&o.stderr));
        let r = result(dir.path());
        assert_eq!(r["completed"], false);
        assert!(r["d_max"].is_null());
        assert!(r["failure"].as_str().unwrap().contains(failure), "{}", r["failure"]);
    }
}

#[test]
fn configuration_faults_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 3] = [&["--variant", "bogus"], &["--scale", "0"], &["--scale", "-1"]];
    for extra in cases {
        let o = run_oval(extra, dir.path());
        assert_eq!(o.status.code(), Some(2), "{extra:?}");
    }
    let missing = sim(&["timing", "--vehicle", "/nonexistent/vehicle.json", "--steps", "10"]);
    assert_eq!(missing.status.code(), Some(2));
    let bench = sim(&["bench", "sweep", "--config", "/nonexistent/sweep.json"]);
    assert_eq!(bench.status.code(), Some(2));
}

#[test]
fn generated_track_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let track = dir.path().join("oval.csv");
    let spec = data("tracks/oval.gen.json");
    let o = sim(&["gen", "track", "--spec", spec.to_str().unwrap(), "--out", track.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        std::fs::read_to_string(&track).unwrap(),
        std::fs::read_to_string(data("tracks/oval.csv")).unwrap()
    );
}
