use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_alphaspec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn csv_columns(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn compatible_prior_solution_equals_prior() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = config("two_state_flat.json");
    let res = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", out, "--grid", "256"]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    for nu in ["1", "2", "4", "inf"] {
        let (header, rows) = csv_columns(&dir.path().join(format!("solution_nu_{nu}.csv")));
        assert_eq!(header, ["theta", "phi", "psi"]);
        assert_eq!(rows.len(), 256);
        for row in &rows {
            assert!((row[1] - row[2]).abs() < 1e-9, "nu = {nu}: {row:?}");
        }
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(format!("solution_nu_{nu}.json"))).unwrap())
                .unwrap();
        assert!(json["constraint_residual"].as_f64().unwrap() < 1e-8);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = config("arma_experiment.json");
    let dirs: Vec<TempDir> = (0..2).map(|_| TempDir::new().unwrap()).collect();
    for d in &dirs {
        let res = run(&[
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            d.path().to_str().unwrap(),
            "--grid",
            "512",
        ]);
        assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    }
    let mut names: Vec<_> = fs::read_dir(dirs[0].path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.iter().any(|n| n == "sweep_summary.json"));
    for name in names {
        let a = fs::read(dirs[0].path().join(&name)).unwrap();
        let b = fs::read(dirs[1].path().join(&name)).unwrap();
        assert_eq!(a, b, "{name:?} differs between runs");
    }
}

#[test]
fn infeasible_target_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = config("infeasible.json");
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&run(&["feasibility", "--config", cfg.to_str().unwrap(), "--out", out])), 2);
    assert_eq!(code(&run(&["solve", "--config", cfg.to_str().unwrap(), "--out", out])), 2);
}

#[test]
fn feasible_target_writes_report() {
    let dir = TempDir::new().unwrap();
    let cfg = config("two_state_flat.json");
    let res = run(&["feasibility", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&res), 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("feasibility.json")).unwrap()).unwrap();
    assert!(report.is_object());
}

#[test]
fn solver_failure_exits_3() {
    let dir = TempDir::new().unwrap();
    let cfg = config("arma_experiment.json");
    let res = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--grid",
        "256",
        "--max-iter",
        "1",
    ]);
    assert_eq!(code(&res), 3, "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn bad_input_exits_64() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(code(&run(&["solve", "--config", missing.to_str().unwrap(), "--out", out])), 64);
    assert_eq!(code(&run(&["solve", "--nu", "zero", "--out", out])), 64);
    assert_eq!(code(&run(&["no-such-command"])), 64);

    let garbage = dir.path().join("garbage.json");
    fs::write(&garbage, "{\"unknown_field\": 1}").unwrap();
    assert_eq!(code(&run(&["solve", "--config", garbage.to_str().unwrap(), "--out", out])), 64);
}

#[test]
fn divergence_command_reports_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = config("divergence.json");
    let res = run(&["divergence", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("divergence.json")).unwrap()).unwrap();
    assert!(report.to_string().contains("kl"));
}

#[test]
fn reproduce_passes_and_fails_on_tight_tolerance() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = run(&["reproduce-paper", "--out", out, "--samples", "5000"]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stdout));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains("PASS") && !stdout.contains("FAIL"));
    for f in ["summary.json", "two_state_kl0.csv", "arma_nu_1.csv", "arma_nu_inf.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let res = run(&["reproduce-paper", "--out", out, "--samples", "5000", "--sigma-tol", "1e-6"]);
    assert_eq!(code(&res), 5);
}
