use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gmi_core::alber::StabilityVerdict;
use gmi_core::experiments::read_records;

fn gmi(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gmi"))
        .args(args)
        .env("GMI_OUTPUT_ROOT", root)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path
}

/// The single run directory under `runs/<experiment>/`.
fn run_dir(root: &Path, experiment: &str) -> PathBuf {
    let mut dirs: Vec<_> = fs::read_dir(root.join("runs").join(experiment))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs.pop().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn zero_spectrum_is_stable() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"spectrum": {"kind": "zero"}, "domain": {"length": 20}}"#);
    let o = gmi(tmp.path(), &["stability", "-c", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let dir = run_dir(tmp.path(), "stability");
    let v = StabilityVerdict::from_json(&fs::read_to_string(dir.join("verdict.json")).unwrap()).unwrap();
    assert!(!v.unstable);
    assert!(dir.join("nyquist.csv").exists());
}

#[test]
fn intense_narrow_sea_is_unstable() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"spectrum": {"kind": "gaussian", "variance": 1, "center": 0.5, "width": 0.02}, "domain": {"length": 50}}"#,
    );
    let o = gmi(tmp.path(), &["stability", "-c", cfg.to_str().unwrap(), "--workers", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = StabilityVerdict::from_json(&fs::read_to_string(run_dir(tmp.path(), "stability").join("verdict.json")).unwrap()).unwrap();
    assert!(v.unstable);
    let curve = fs::read_to_string(run_dir(tmp.path(), "stability").join("nyquist.csv")).unwrap();
    assert!(curve.starts_with("re_omega,im_omega,re_h,im_h"));
}

#[test]
fn table1_cell_matches_published_value() {
    let tmp = tempfile::tempdir().unwrap();
    let o = gmi(tmp.path(), &["table1", "--j", "2", "--N", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(run_dir(tmp.path(), "table1").join("metric.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("j,N,max_delta,published"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!((row[0], row[1]), ("2", "3"));
    let value: f64 = row[2].parse().unwrap();
    assert!((value - 3.09).abs() < 0.15 * 3.09, "{value}");
    assert_eq!(row[3], "3.09");
}

#[test]
fn converge_error_column_is_monotone() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"spectrum": {"kind": "gaussian", "variance": 1, "center": 1, "width": 0.1},
            "domain": {"length": 50},
            "stability": {"converge_x": 0.6066666666666667, "converge_omega": [0.4, 0.1]}}"#,
    );
    let o = gmi(tmp.path(), &["converge", "-c", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(run_dir(tmp.path(), "converge").join("convergence.csv")).unwrap();
    let errors: Vec<f64> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(errors.len(), 4);
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

#[test]
fn dry_run_prints_resolved_config_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"domain": {"length": 20}, "seed": 5}"#);
    let o = gmi(tmp.path(), &["--dry-run", "simulate", "-c", cfg.to_str().unwrap(), "--length", "30", "--seed", "9"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["domain"]["length"], 30.0);
    assert_eq!(v["seed"], 9);
    assert_eq!(v["simulation"]["dt"], 4e-3);
    assert_eq!(v["simulation"]["convention"], "full");
    assert_eq!(v["output"], tmp.path().to_str().unwrap());
    assert!(!tmp.path().join("runs").exists());
}

#[test]
fn every_subcommand_accepts_dry_run() {
    let tmp = tempfile::tempdir().unwrap();
    for sub in ["spectrum", "realize", "stability", "converge", "simulate", "table1", "gmi", "run"] {
        let o = gmi(tmp.path(), &[sub, "--dry-run"]);
        assert!(o.status.success(), "{sub}: {}", stderr(&o));
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert!(v.get("spectrum").is_some());
    }
}

#[test]
fn config_errors_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let unknown = write_config(tmp.path(), r#"{"domian": {}}"#);
    assert_eq!(gmi(tmp.path(), &["spectrum", "-c", unknown.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(gmi(tmp.path(), &["spectrum", "-c", "/nonexistent/config.json"]).status.code(), Some(2));
    assert_eq!(gmi(tmp.path(), &["gmi", "--N", "1.5"]).status.code(), Some(2));
    assert_eq!(gmi(tmp.path(), &["table1", "--j", "7", "--N", "1"]).status.code(), Some(2));
}

#[test]
fn numerical_aborts_exit_with_code_3() {
    let tmp = tempfile::tempdir().unwrap();
    // A sea state violent enough to blow up explicit arithmetic would be slow to
    // find; the kernel's half-plane check is the quickest numerical abort.
    let cfg = write_config(tmp.path(), r#"{"stability": {"converge_omega": [-0.5, 0.0]}}"#);
    let o = gmi(tmp.path(), &["converge", "-c", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn undecided_contour_exits_with_code_4() {
    let tmp = tempfile::tempdir().unwrap();
    // An arc that never clears |h̃| < 0.5 within the allowed shrinks.
    let cfg = write_config(
        tmp.path(),
        r#"{"spectrum": {"kind": "gaussian", "variance": 50, "center": 0.5, "width": 0.02},
            "domain": {"length": 20},
            "stability": {"contour": {"epsilon": 0.5, "n_line": 64, "n_arc": 32, "max_shrinks": 0}}}"#,
    );
    let o = gmi(tmp.path(), &["stability", "-c", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(run_dir(tmp.path(), "stability").join("verdict.json").exists());
}

#[test]
fn reruns_reproduce_artifacts_byte_for_byte() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"spectrum": {"kind": "gaussian", "variance": 0.05, "center": 0.5, "width": 0.1},
            "domain": {"length": 20}, "seed": 11,
            "simulation": {"initial": {"kind": "sea_state"}, "dx": 0.05, "dt": 0.01, "t_final": 0.5, "store_every": 10},
            "experiment": {"realize": {"count": 3}}}"#,
    );
    let c = cfg.to_str().unwrap();
    for sub in ["simulate", "realize", "spectrum"] {
        let snapshot = |root: &Path| -> Vec<(String, Vec<u8>)> {
            let dir = run_dir(root, sub);
            let mut files: Vec<_> = fs::read_dir(&dir)
                .unwrap()
                .map(|e| e.unwrap().path())
                .filter(|p| p.file_name().unwrap() != "records.jsonl")
                .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
                .collect();
            files.sort();
            files
        };
        assert!(gmi(tmp.path(), &[sub, "-c", c, "--workers", "1"]).status.success());
        let first = snapshot(tmp.path());
        assert!(gmi(tmp.path(), &[sub, "-c", c, "--workers", "4"]).status.success());
        assert_eq!(first, snapshot(tmp.path()), "{sub}");

        let records = read_records(&run_dir(tmp.path(), sub).join("records.jsonl")).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].outputs, records[1].outputs);
        assert_eq!(records[0].config, records[1].config);
        assert!(records[0].artifacts.iter().all(|a| run_dir(tmp.path(), sub).join(a).exists()));
    }
}

#[test]
fn seed_changes_the_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(gmi(tmp.path(), &["realize", "--length", "10", "--seed", "1"]).status.success());
    assert!(gmi(tmp.path(), &["realize", "--length", "10", "--seed", "2"]).status.success());
    assert_eq!(fs::read_dir(tmp.path().join("runs/realize")).unwrap().count(), 2);
}

#[test]
fn simulated_field_round_trips_through_its_sidecar() {
    let tmp = tempfile::tempdir().unwrap();
    let o = gmi(
        tmp.path(),
        &["simulate", "--length", "10", "--dx", "0.05", "--dt", "0.01", "--t-final", "0.5"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let dir = run_dir(tmp.path(), "simulate");
    let (side, snaps) = gmi_core::io::import_field(&dir.join("field.bin"), &dir.join("field.json")).unwrap();
    assert_eq!(side.nx, 200);
    assert_eq!(snaps.len(), side.times.len());
    let heat = fs::read_to_string(dir.join("heatmap.csv")).unwrap();
    assert_eq!(heat.lines().count(), side.times.len() + 1);
}
