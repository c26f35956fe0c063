use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pbec_core::config::{parse_config, RunConfig};
use pbec_core::output::{RunManifest, LOCK_FILE};

fn pbec(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pbec"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"
[cavity]
l_max = 10

[medium]
n_left = 1.3435
n_right = 1.3395

[sweep.pump]
points = 12

[sweep.chi]
points = 9
gamma_up0_scales = [0.5, 1.0]

[sweep.grid]
chi_points = 3
pump_points = 4
"#;

fn small_config(dir: &Path) -> String {
    fs::write(dir.join("small.toml"), SMALL).unwrap();
    "small.toml".to_string()
}

fn column(csv: &str, name: &str) -> Vec<Option<f64>> {
    let mut r = csv::Reader::from_reader(csv.as_bytes());
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|row| row.unwrap()[idx].parse().ok()).collect()
}

#[test]
fn emitted_defaults_parse_back_to_the_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let o = pbec(&["emit-defaults"], tmp.path());
    assert!(o.status.success());
    assert_eq!(parse_config(&stdout(&o)).unwrap(), RunConfig::default());
}

#[test]
fn threshold_without_chirality_is_degenerate() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.toml"), "[medium]\nn_left = 1.34\nn_right = 1.34\n").unwrap();
    let o = pbec(&["threshold", "--config", "c.toml"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("winner = degenerate"), "{out}");
    let tau: Vec<&str> = out.lines().filter(|l| l.starts_with("tau_")).map(|l| l.split(" = ").nth(1).unwrap()).collect();
    assert_eq!(tau[0], tau[1]);
}

#[test]
fn threshold_reference_winner_is_left() {
    let tmp = tempfile::tempdir().unwrap();
    let o = pbec(&["threshold"], tmp.path());
    assert!(stdout(&o).contains("winner = L"));
}

#[test]
fn seed_less_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let o = pbec(&["threshold", "--seed-less"], tmp.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("--seed-less"));
}

#[test]
fn bad_config_reports_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.toml"), "[medium]\nn_left = 1.34\nn_right = 1.34\n[dye]\npump = 10\n").unwrap();
    let o = pbec(&["threshold", "--config", "c.toml"], tmp.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("line 5"), "{}", stderr(&o));
    fs::write(tmp.path().join("e.toml"), "[medium]\n").unwrap();
    let o = pbec(&["threshold", "--config", "e.toml"], tmp.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("validation"), "{}", stderr(&o));
}

#[test]
fn reference_pump_sweep_condenses_into_left() {
    let tmp = tempfile::tempdir().unwrap();
    let o = pbec(&["sweep-pump", "--out", "run"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let run = tmp.path().join("run");
    for f in ["pump_sweep.csv", "pump_sweep_pinned.csv", "pump_sweep.gp", "manifest.json", "config.toml"] {
        assert!(run.join(f).exists(), "{f} missing");
    }
    assert!(!run.join(LOCK_FILE).exists());
    let csv = fs::read_to_string(run.join("pump_sweep.csv")).unwrap();
    let s3: Vec<f64> = column(&csv, "s3").into_iter().map(Option::unwrap).collect();
    assert!(s3[0] > -0.9);
    assert!(*s3.last().unwrap() < -0.9);
    let manifest = RunManifest::read(&run.join("manifest.json")).unwrap();
    assert_eq!(manifest.command, "sweep-pump");
    assert_eq!(manifest.sweeps[0].summary.converged, 100);
}

#[test]
fn sweeps_are_byte_identical_and_replayable() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    for (cmd, file) in [("sweep-chi", "chi_sweep.csv"), ("sweep-grid", "grid_sweep.csv"), ("sweep-pump", "pump_sweep.csv")] {
        let a = pbec(&[cmd, "--config", &cfg, "--out", "a"], tmp.path());
        assert!(a.status.success(), "{}", stderr(&a));
        let b = pbec(&[cmd, "--config", &cfg, "--out", "b", "--threads", "1"], tmp.path());
        assert!(b.status.success(), "{}", stderr(&b));
        let replay = pbec(&[cmd, "--config", "a/config.toml", "--out", "c"], tmp.path());
        assert!(replay.status.success(), "{}", stderr(&replay));
        let read = |d: &str| fs::read(tmp.path().join(d).join(file)).unwrap();
        assert_eq!(read("a"), read("b"), "{cmd}");
        assert_eq!(read("a"), read("c"), "{cmd}");
    }
}

#[test]
fn chi_sweep_has_one_trace_per_scale() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let o = pbec(&["sweep-chi", "--config", &cfg, "--out", "run"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("run/chi_sweep.csv")).unwrap();
    assert!(csv.starts_with("gamma_up0_scale,chi,"));
    assert_eq!(csv.lines().count(), 1 + 2 * 9);
}

#[test]
fn locked_directory_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    fs::create_dir(tmp.path().join("run")).unwrap();
    fs::write(tmp.path().join("run").join(LOCK_FILE), "1\n").unwrap();
    let o = pbec(&["modes", "--config", &cfg, "--out", "run"], tmp.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("locked"), "{}", stderr(&o));
}

#[test]
fn modes_and_spectrum_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let o = pbec(&["modes", "--out", "m"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(tmp.path().join("m/modes.csv")).unwrap().lines().count(), 1 + 402);
    let o = pbec(&["spectrum", "--out", "s"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["spectrum.csv", "spectrum_modes.csv", "spectrum.gp"] {
        assert!(tmp.path().join("s").join(f).exists(), "{f} missing");
    }
}

#[test]
fn sensitivity_needs_a_sample() {
    let tmp = tempfile::tempdir().unwrap();
    let o = pbec(&["sensitivity", "--out", "x"], tmp.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("sample"), "{}", stderr(&o));
    fs::write(tmp.path().join("c.toml"), "[cavity]\nl_max = 10\n[medium.sample]\nepsilon = 0.5\n").unwrap();
    let o = pbec(&["sensitivity", "--config", "c.toml", "--out", "y"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("dS3/depsilon"));
    assert!(tmp.path().join("y/sensitivity.json").exists());
}

#[test]
fn selftest_passes_on_reference() {
    let tmp = tempfile::tempdir().unwrap();
    let o = pbec(&["selftest"], tmp.path());
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert!(!stdout(&o).contains("FAIL"));
}
