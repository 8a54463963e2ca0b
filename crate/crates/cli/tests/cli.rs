use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use memcoll_cli::output::{COLLISION_HEADER, SWEEP_HEADER};
use serde_json::Value;
use tempfile::tempdir;

fn memcoll(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memcoll"))
        .args(args)
        .env_remove("MEMCOLL_OUT_DIR")
        .output()
        .unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn run_writes_all_outputs() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("run");
    let o = memcoll(&["run", "--set", "n_max=60", "--out", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let csv = fs::read_to_string(out.join("collisions.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], COLLISION_HEADER);
    assert_eq!(lines.len(), 61);
    assert!(lines[60].starts_with("60,"));

    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["schema"], 1);
    assert_eq!(summary["summary"]["first_nq_positive"], 40);
    assert_eq!(summary["parameters"]["n_max"], 60);
    assert!(summary["halted"].is_null());

    let maps = fs::read_to_string(out.join("maps.jsonl")).unwrap();
    assert_eq!(maps.lines().count(), 60);
    let first: Value = serde_json::from_str(maps.lines().next().unwrap()).unwrap();
    assert_eq!(first["n"], 1);
    assert_eq!(first["M"].as_array().unwrap().len(), 9);
}

#[test]
fn rows_satisfy_witness_invariants() {
    let dir = tempdir().unwrap();
    let o = memcoll(&["run", "--set", "n_max=200", "--format", "csv", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let csv = fs::read_to_string(dir.path().join("collisions.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (nq, g) = (col("N_q"), col("g_n"));
    for line in csv.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[nq] >= 0.0 && v[g] >= -1e-12);
    }
    assert!(!dir.path().join("summary.json").exists());
}

#[test]
fn output_is_byte_identical_across_runs() {
    let dir = tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        assert!(memcoll(&["run", "--set", "n_max=100", "--out", d.to_str().unwrap(), "--quiet"]).status.success());
    }
    for f in ["collisions.csv", "summary.json", "maps.jsonl"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn single_collision_gives_one_row() {
    let dir = tempdir().unwrap();
    let o = memcoll(&["run", "--set", "n_max=1", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let csv = fs::read_to_string(dir.path().join("collisions.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn markovian_configuration_has_zero_measures() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("swap.cfg");
    fs::write(&cfg, "# full memory-environment swap\ntau2 = 7.853981633974483\nn_max = 200\n").unwrap();
    let out = dir.path().join("out");
    let o = memcoll(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let s = read_json(&out.join("summary.json"));
    assert!(s["summary"]["i_rhp"].as_f64().unwrap() < 1e-10);
    assert!(s["summary"]["i_lfs"].as_f64().unwrap() < 1e-10);
}

#[test]
fn config_errors_exit_with_one() {
    assert_eq!(memcoll(&["run", "--set", "beta=-1"]).status.code(), Some(1));
    assert_eq!(memcoll(&["run", "--set", "nonsense=1"]).status.code(), Some(1));
    assert_eq!(memcoll(&["run", "--config", "/nonexistent/file.cfg"]).status.code(), Some(1));
    assert_eq!(memcoll(&["run", "--format", "xml"]).status.code(), Some(1));
    assert_eq!(memcoll(&["sweep", "--set", "kind=single_run"]).status.code(), Some(1));
    assert_eq!(memcoll(&["run", "--set", "kind=detuning_sweep"]).status.code(), Some(1));
}

#[test]
fn singular_map_exits_with_two_and_keeps_partial_output() {
    let dir = tempdir().unwrap();
    let o = memcoll(&["run", "--set", "tau1=7.853981633974483", "--set", "n_max=10", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not invertible"));
    let csv = fs::read_to_string(dir.path().join("collisions.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let s = read_json(&dir.path().join("summary.json"));
    assert!(s["halted"].as_str().unwrap().contains("at collision 2"));
}

#[test]
fn environment_sets_default_output_dir() {
    let dir = tempdir().unwrap();
    let env_dir = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_memcoll"))
        .args(["run", "--set", "n_max=3", "--quiet"])
        .env("MEMCOLL_OUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(env_dir.join("collisions.csv").exists());

    let flag_dir = dir.path().join("from-flag");
    let o = Command::new(env!("CARGO_BIN_EXE_memcoll"))
        .args(["run", "--set", "n_max=3", "--quiet", "--out", flag_dir.to_str().unwrap()])
        .env("MEMCOLL_OUT_DIR", dir.path().join("unused"))
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(flag_dir.join("collisions.csv").exists());
    assert!(!dir.path().join("unused").exists());
}

#[test]
fn sweep_rows_follow_grid_order() {
    let dir = tempdir().unwrap();
    let o = memcoll(&[
        "sweep", "--set", "grid_points=5", "--set", "n_max=150", "--workers", "2", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], SWEEP_HEADER);
    assert_eq!(lines.len(), 6);
    let grid: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(grid, vec![-0.5, -0.25, 0.0, 0.25, 0.5]);
    assert!(lines[1..].iter().all(|l| l.ends_with(',')));

    let json = read_json(&dir.path().join("sweep.json"));
    assert_eq!(json["schema"], 1);
    assert_eq!(json["kind"], "detuning_sweep");
    assert_eq!(json["points"].as_array().unwrap().len(), 5);
}

#[test]
fn zero_detuning_point_matches_single_run() {
    let dir = tempdir().unwrap();
    let (sweep, single) = (dir.path().join("sweep"), dir.path().join("single"));
    let o = memcoll(&["sweep", "--set", "grid_points=3", "--set", "n_max=120", "--format", "json", "--out", sweep.to_str().unwrap()]);
    assert!(o.status.success());
    let o = memcoll(&["run", "--set", "n_max=120", "--format", "json", "--out", single.to_str().unwrap()]);
    assert!(o.status.success());
    let point = &read_json(&sweep.join("sweep.json"))["points"][1];
    assert_eq!(point["grid_value"], 0.0);
    assert_eq!(point["summary"], read_json(&single.join("summary.json"))["summary"]);
}

#[test]
fn failed_points_are_marked_and_exit_with_three() {
    let dir = tempdir().unwrap();
    let o = memcoll(&[
        "sweep", "--set", "kind=anisotropy_sweep", "--set", "grid_points=3", "--set", "grid_min=-0.5",
        "--set", "grid_max=0.5", "--set", "tau1=7.853981633974483", "--set", "n_max=10", "--format", "csv",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].contains("not invertible"));
}
