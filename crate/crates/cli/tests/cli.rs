use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dispersive_lab_cli::{Experiment, RunConfig, RunManifest};

fn run(experiment: &str, config: &str, dir: &Path, extra: &[&str]) -> Output {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_dispersive-lab"))
        .arg(experiment)
        .arg("--config")
        .arg(&cfg)
        .args(extra)
        .env_remove("DISPERSIVE_LAB_THREADS")
        .output()
        .unwrap()
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn threshold_table_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run("threshold_table", "", tmp.path(), &["--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("thresholds.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 12);
    assert_eq!(rows[0][..2], [1.0, 0.75]);
    assert_eq!(rows[10][..2], [2.0, 2.0 / 3.0]);
    assert_eq!(format!("{:.4}", rows[10][1]), "0.6667");
    assert_eq!(rows[11][0], 2f64.sqrt());
    for r in &rows {
        assert!((r[1] - (1.0 - r[0] / (2.0 * (r[0] + 1.0)))).abs() < 1e-15);
        assert!((r[3] - r[2] - 0.25).abs() < 1e-15);
    }
}

#[test]
fn unknown_key_is_a_config_error_with_suggestion() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run("solve", "sheme = etdrk4\n", tmp.path(), &["--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("sheme") && err.contains("solver.scheme"), "{err}");
    let report: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(report["error"], "unknown_key");
}

#[test]
fn invalid_combinations_and_experiments_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let out = out.to_str().unwrap();
    assert_eq!(run("solve", "symbol.kind = ilw\n", tmp.path(), &["--out", out]).status.code(), Some(2));
    assert_eq!(run("simulate", "", tmp.path(), &["--out", out]).status.code(), Some(2));
    assert_eq!(run("global_demo", "f = poly:0,0,1\n", tmp.path(), &["--out", out]).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_dispersive-lab"))
        .args(["threshold_table", "--config", tmp.path().join("run.cfg").to_str().unwrap(), "--out", out])
        .env("DISPERSIVE_LAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn blow_up_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "grid.m = 64\ninitial.modes = 1:40\ntime.dt = 0.01\ntime.record_every = 1\nsolver.dealias = none\n";
    let o = run("solve", cfg, tmp.path(), &["--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("blow-up"));
}

#[test]
fn io_errors_exit_4() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("plain");
    fs::write(&file, "").unwrap();
    let o = run("threshold_table", "", tmp.path(), &["--out", file.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    let o = Command::new(env!("CARGO_BIN_EXE_dispersive-lab"))
        .args(["threshold_table", "--config", tmp.path().join("missing.cfg").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = "grid.m = 64\ntime.t_final = 0.25\ntime.record_every = 10\ninitial.kind = random\ninitial.kmax = 6\nstrichartz.trials = 3\nstrichartz.constant_trials = 8\n";
    let first = |name: &str| {
        let o = run(name, cfg, tmp.path(), &["--out", out.to_str().unwrap(), "--seed", "7"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let m = manifest(&out);
        let bytes: Vec<Vec<u8>> = m.files.iter().map(|f| fs::read(out.join(&f.name)).unwrap()).collect();
        (m, bytes)
    };
    for name in ["strichartz", "conserve", "resonance"] {
        let (mut a, ba) = first(name);
        let (mut b, bb) = first(name);
        assert_eq!(ba, bb, "{name}");
        assert!(!a.files.is_empty());
        a.wall_time_seconds = 0.0;
        b.wall_time_seconds = 0.0;
        assert_eq!(a, b, "{name}");
        assert_eq!(a.seed, 7);
    }
}

#[test]
fn manifest_echo_reparses_to_the_run_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let text = "symbol.kind = smith\nsymbol.alpha = 1\nresonance.k = 2\nresonance.xi_max = 32\n";
    let o = run("resonance", text, tmp.path(), &["--out", out.to_str().unwrap(), "--seed", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    let mut expected = RunConfig::from_text(text, "run.cfg", Experiment::Resonance).unwrap();
    expected.seed = 3;
    expected.output_dir = out.clone();
    assert_eq!(RunConfig::from_map(&m.config).unwrap(), expected);
    for f in &m.files {
        assert_eq!(fs::read(out.join(&f.name)).unwrap().len() as u64, f.bytes);
        assert_eq!(f.sha256.len(), 64);
    }
    let csv = fs::read_to_string(out.join("resonance.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "mode,k,alpha,xi_max,lambda_sim,lambda_gg,min_ratio,witness");
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "res1");
    assert!(row[6].parse::<f64>().unwrap() > 0.0);
    assert_eq!(row[7].split(';').count(), 4);
}

#[test]
fn solve_writes_spectral_dumps() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run(
        "solve",
        "grid.m = 32\ntime.t_final = 0.1\ntime.record_every = 50\n",
        tmp.path(),
        &["--out", out.to_str().unwrap()],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    let names: Vec<&str> = m.files.iter().map(|f| f.name.as_str()).collect();
    assert_eq!(names, ["invariants.csv", "trajectory/t_0.csv", "trajectory/t_1.csv", "trajectory/t_2.csv"]);
    let dump = fs::read_to_string(out.join("trajectory/t_2.csv")).unwrap();
    let u = dispersive_lab::spectral::read_spectral_csv(&dump).unwrap();
    assert_eq!(u.grid().m(), 32);
    assert!(m.summary["max_mass_drift"].parse::<f64>().unwrap() < 1e-10);
}

#[test]
fn global_demo_stays_below_bound() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = "f = poly:0,0,0,-1\ngrid.m = 64\ninitial.h1_norm = 1\ntime.t_final = 2\n";
    let o = run("global_demo", cfg, tmp.path(), &["--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(manifest(&out).summary["within_bound"], "true");
}

#[test]
fn bourgain_and_envelope_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("norms");
    let cfg = "grid.m = 32\ntime.t_final = 0.25\ntime.record_every = 10\nbourgain.envelope = true\n";
    let o = run("bourgain_norms", cfg, tmp.path(), &["--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("norms.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "quantity,s,b,value,grid_M,window");
    assert_eq!(csv.lines().count(), 8);
    let m = manifest(&out);
    assert!(m.summary["plancherel_residual"].parse::<f64>().unwrap() < 1e-10);

    let out = tmp.path().join("env");
    let o = run("envelope", "grid.m = 64\n", tmp.path(), &["--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = fs::read_to_string(out.join("envelope.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "N,omega");
    assert!(out.join("envelope_tamed.csv").exists());
}
