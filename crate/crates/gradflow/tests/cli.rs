//! End-to-end checks of the binary: exit-code contract, file outputs, and
//! the verify path on serialized trajectories.

use std::path::Path;
use std::process::Command;

fn gradflow() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gradflow"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const QUADRATIC_SCENARIO: &str = r#"
seed = 1
[space]
kind = "euclidean"
dim = 1
[functional]
kind = "quadratic"
a = 1.0
[initial]
coords = [1.0]
[scheme]
horizon = 1.0
n_list = [4, 8, 16, 32, 64]
[audits]
names = ["rates", "crandall-liggett", "discrete-stability", "local-error"]
min_order = 0.9
"#;

#[test]
fn run_passes_on_the_quadratic_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("quad.toml");
    write(&cfg, QUADRATIC_SCENARIO);
    let out = dir.path().join("out");
    let status = gradflow()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--jobs")
        .arg("2")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.join("rates.csv").exists());
    assert!(out.join("summary.txt").exists());
    assert!(out.join("audit_crandall-liggett.txt").exists());
    let csv = std::fs::read_to_string(out.join("rates.csv")).unwrap();
    assert!(csv.starts_with("n,tau,sup_error,bound_rhs,eps_measured,fitted_order"));
    assert_eq!(csv.lines().count(), 6); // header + five rows
}

#[test]
fn unknown_functional_kind_exits_one_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    write(&cfg, &QUADRATIC_SCENARIO.replace("\"quadratic\"", "\"cubic\""));
    let output = gradflow()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("functional.kind"), "{stderr}");
}

#[test]
fn missing_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let status = gradflow()
        .args(["run", "--config"])
        .arg(dir.path().join("nowhere.toml"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn violated_audit_exits_two() {
    // a time-reversed trajectory violates slope monotonicity
    let dir = tempfile::tempdir().unwrap();
    let mut rows = String::from("# gradflow trajectory tau=0.1 eta=0 eps=0\n");
    for n in 0..=10 {
        let t = n as f64 * 0.1;
        let x = (t - 1.0f64).exp(); // growing along the run
        rows.push_str(&format!("{n}\t{t}\t{x}\t{}\t{}\t0\n", x * x / 2.0, x));
    }
    let traj_path = dir.path().join("reversed.tsv");
    write(&traj_path, &rows);
    let cfg = dir.path().join("verify.toml");
    write(
        &cfg,
        &format!(
            r#"
[space]
kind = "euclidean"
dim = 1
[functional]
kind = "quadratic"
a = 1.0
[initial]
coords = [1.0]
[scheme]
horizon = 1.0
n_list = [10]
[audits]
names = ["slope-monotonicity"]
[verify]
trajectory = "{}"
"#,
            traj_path.display()
        ),
    );
    let status = gradflow()
        .args(["verify", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn verify_accepts_a_genuine_scheme_trajectory() {
    // produce a trajectory with `run`, then audit it with `verify`
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("quad.toml");
    write(
        &cfg,
        &format!(
            "{QUADRATIC_SCENARIO}\n[output]\nsave_trajectory = true\n[verify]\ntrajectory = \"{}\"\n",
            dir.path().join("out/trajectory.tsv").display()
        ),
    );
    let out = dir.path().join("out");
    let status = gradflow()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let cfg2 = dir.path().join("verify.toml");
    write(
        &cfg2,
        &format!(
            r#"
[space]
kind = "euclidean"
dim = 1
[functional]
kind = "quadratic"
a = 1.0
[initial]
coords = [1.0]
[scheme]
horizon = 1.0
n_list = [64]
[audits]
names = ["discrete-stability", "slope-monotonicity"]
[verify]
trajectory = "{}"
"#,
            out.join("trajectory.tsv").display()
        ),
    );
    let status = gradflow()
        .args(["verify", "--config"])
        .arg(&cfg2)
        .arg("--out")
        .arg(dir.path().join("vout"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn rates_subcommand_writes_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("quad.toml");
    write(&cfg, QUADRATIC_SCENARIO);
    let out = dir.path().join("rates-out");
    let status = gradflow()
        .args(["rates", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.join("rates.csv").exists());
}

#[test]
fn list_prints_the_catalog() {
    let output = gradflow().arg("list").output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    for needle in ["euclidean", "quantile", "entropy", "crandall-liggett", "duality"] {
        assert!(stdout.contains(needle), "missing {needle}");
    }
}

#[test]
fn quantile_scenario_with_entropy_audits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("heat.toml");
    write(
        &cfg,
        r#"
seed = 3
[space]
kind = "quantile"
grid_m = 64
[functional]
kind = "entropy"
[initial]
gaussian = { mean = 0.0, variance = 1.0 }
[initial2]
gaussian = { mean = 1.0, variance = 1.0 }
[scheme]
horizon = 0.25
n_list = [8, 16, 32]
refine_reference = 8
[audits]
names = ["rates", "contraction", "mccann", "discrete-stability"]
min_order = 0.45
"#,
    );
    let out = dir.path().join("out");
    let status = gradflow()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("mccann pass=true"));
}
