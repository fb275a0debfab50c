use std::path::Path;
use std::process::{Command, Output};

fn reptest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reptest"))
        .args(args)
        .env_remove("REPTEST_CONSTANTS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn uniform_instance_is_accepted() {
    let o = reptest(&["test", "--n", "1000", "--eps", "0.25", "--rho", "0.2", "--instance", "uniform", "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["decision"], "accept");
    assert_eq!(v["statistics"].as_array().unwrap().len() as u64, v["m0"].as_u64().unwrap());
}

#[test]
fn point_mass_is_rejected() {
    let o = reptest(&["test", "--n", "1000", "--eps", "0.25", "--rho", "0.2", "--instance", "point-mass"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn missing_eps_is_a_usage_error() {
    let o = reptest(&["test", "--n", "1000", "--rho", "0.2"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bad_constants_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    std::fs::write(&path, "c_gap=-1\n").unwrap();
    let o = reptest(&["test", "--n", "100", "--eps", "0.3", "--rho", "0.2", "--constants", path.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn pmf_file_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.txt");
    std::fs::write(&path, "0.25\n0.25\n0.25\n0.25\n").unwrap();
    let o = reptest(&["test", "--n", "4", "--eps", "0.3", "--rho", "0.2", "--pmf-file", path.to_str().unwrap()]);
    assert!(code(&o) <= 1, "{}", String::from_utf8_lossy(&o.stderr));
    let o = reptest(&["test", "--n", "5", "--eps", "0.3", "--rho", "0.2", "--pmf-file", path.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn constants_env_var_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.cfg");
    std::fs::write(&path, "c_m1=oops\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_reptest"))
        .args(["test", "--n", "100", "--eps", "0.3", "--rho", "0.2"])
        .env("REPTEST_CONSTANTS", &path)
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn replicability_gate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let base = ["experiment", "replicability", "--n", "1000", "--eps", "0.25", "--rho", "0.2", "--pairs", "1000", "--workers", "4", "--out", out];
    let o = reptest(&[&base[..], &["--assert-rate", "0.8"]].concat());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("replicability.json")).unwrap()).unwrap();
    assert!(summary["rate"].as_f64().unwrap() >= 0.8);
    assert!(summary["wilson_lo"].as_f64().unwrap() <= summary["rate"].as_f64().unwrap());
    let o = reptest(&[&base[..], &["--assert-rate", "1.01"]].concat());
    assert_eq!(code(&o), 1);
}

fn body_rows(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn sweep_writes_one_row_per_grid_point() {
    let o = reptest(&["experiment", "sweep", "--grid", "0:0.5:21", "--trials-per-point", "10", "--workers", "4"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("# experiment=sweep"));
    assert_eq!(body_rows(&text).len(), 22);
}

#[test]
fn barrier_prints_a_slope_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = reptest(&[
        "experiment", "barrier", "--stat", "collision", "--n", "10000", "--runs", "200", "--workers", "4",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("log-log slope"));
    let csv = std::fs::read_to_string(dir.path().join("barrier.csv")).unwrap();
    assert_eq!(body_rows(&csv).len(), 10);
}

#[test]
fn outputs_do_not_depend_on_workers() {
    let run = |w: &str, dir: &Path| {
        let o = reptest(&[
            "experiment", "correctness", "--n", "500", "--eps", "0.3", "--instance", "paired-bias", "--xi", "0.3",
            "--trials", "30", "--workers", w, "--out", dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
        (
            std::fs::read(dir.join("correctness.csv")).unwrap(),
            std::fs::read(dir.join("correctness.json")).unwrap(),
        )
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run("1", a.path()), run("8", b.path()));
}

#[test]
fn calibrate_writes_a_loadable_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.cfg");
    let o = reptest(&[
        "calibrate", "--pilot", "400:0.3", "--rho", "0.2", "--trials", "60", "--workers", "4", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# calibrate"));
    let o = reptest(&["test", "--n", "400", "--eps", "0.3", "--rho", "0.2", "--constants", path.to_str().unwrap()]);
    assert!(code(&o) <= 1);
}

#[test]
fn calibrate_without_trials_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.cfg");
    let o = reptest(&["calibrate", "--default-grid", "--trials", "0", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(!path.exists());
}

#[test]
fn reduction_check_passes() {
    let o = reptest(&["oracle", "reduction-check", "--max-n", "4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn mi_grid_emits_csv() {
    let o = reptest(&["oracle", "mi-grid"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let rows = body_rows(&text);
    assert_eq!(rows[0], "lambda,eps0,eps1,K,tail_mass,mi_nats,error_budget");
    assert_eq!(rows.len(), 1 + 3 * 2 * 3);
}

#[test]
fn infeasible_calibration_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("tiny.cfg");
    std::fs::write(&base, "c_m1=0.001\nc_m2=0.001\n").unwrap();
    let out = dir.path().join("c.cfg");
    let o = reptest(&[
        "calibrate", "--pilot", "2000:0.2", "--trials", "100", "--constants", base.to_str().unwrap(), "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible"));
    assert!(!out.exists());
}
