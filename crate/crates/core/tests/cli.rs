//! The `tunneltime` binary end to end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tunnel_traversal::cli::{emit, load_config, parse_config, CSV_HEADER};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/scenarios").join(name)
}

fn tunneltime(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tunneltime")).args(args).output().unwrap()
}

fn run_in(dir: &Path, config: &Path, extra: &[&str]) -> Output {
    let mut args = vec![config.to_str().unwrap(), "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    tunneltime(&args)
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("scenario.toml");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn two_step_scenario_writes_csv_and_oracle_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &scenario("two_step.toml"), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "two-step");
    assert_eq!(row.len(), 9);
    let trav: f64 = row[2].parse().unwrap();
    let part: f64 = row[3].parse().unwrap();
    let non: f64 = row[4].parse().unwrap();
    assert!((part + non - trav).abs() < 1e-12 * trav);
    assert_eq!(row[5].parse::<f64>().unwrap(), 0.0);
    let report = fs::read_to_string(dir.path().join("oracle_report.txt")).unwrap();
    assert!(report.contains("max relative deviation"));
    assert!(String::from_utf8_lossy(&out.stdout).contains("two-step"));
}

#[test]
fn csv_values_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert_eq!(run_in(d.path(), &scenario("two_step.toml"), &["--task", "decompose"]).status.code(), Some(0));
    }
    let strip = |p: &Path| -> Vec<String> {
        fs::read_to_string(p.join("results.csv"))
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    assert_eq!(strip(a.path()), strip(b.path()));
}

#[test]
fn attoclock_scan_is_decreasing() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &scenario("attoclock_scan.toml"), &["--quiet"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let dat = fs::read_to_string(dir.path().join("scan_field.dat")).unwrap();
    let ys: Vec<f64> = dat
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(ys.len(), 10);
    assert!(ys.windows(2).all(|w| w[1] < w[0]), "{ys:?}");
    let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 1 + 10);
}

#[test]
fn other_scenarios_run() {
    for name in ["gaussian_bump.toml", "sampled_density.toml"] {
        let dir = tempfile::tempdir().unwrap();
        let out = run_in(dir.path(), &scenario(name), &[]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn bundled_scenarios_round_trip() {
    let names = ["two_step.toml", "attoclock_scan.toml", "gaussian_bump.toml", "sampled_density.toml"];
    for name in names {
        let c = load_config(&scenario(name)).unwrap();
        assert_eq!(parse_config(&emit(&c)).unwrap(), c, "{name}");
    }
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenario("two_step.toml")).unwrap();
    let bad = text.replace("sigma = 2.5", "sigma = -2.5").replace("b = 0.9", "b = 0.9\ncolour = 1");
    let out = run_in(dir.path(), &write_config(dir.path(), &bad), &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("packet.sigma") && err.contains("barrier.colour"), "{err}");
    assert!(!dir.path().join("results.csv").exists());
}

#[test]
fn unknown_task_flag_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &scenario("two_step.toml"), &["--task", "tunnel"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn over_threshold_field_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenario("attoclock_scan.toml"))
        .unwrap()
        .replace("field = 0.05", "field = 0.2");
    let out = run_in(dir.path(), &write_config(dir.path(), &text), &["--task", "traverse"]);
    assert_eq!(out.status.code(), Some(1));
    let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains(",error,"));
}

#[test]
fn non_convergence_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenario("two_step.toml"))
        .unwrap()
        .replace("tasks = [\"decompose\", \"oracle\"]", "tasks = [\"decompose\"]\nquad = { max_subdivisions = 1 }");
    let out = run_in(dir.path(), &write_config(dir.path(), &text), &["--rel-tol", "1e-15"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_file_exits_with_one() {
    let out = tunneltime(&["/nonexistent/scenario.toml"]);
    assert_eq!(out.status.code(), Some(1));
}
