use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = r#"{
  "master_seed": 11,
  "n_drops": 5,
  "n_stat_batches": 6,
  "physical": { "quadrature_nodes": 256 },
  "sweeps": {
    "l_over_lambda": [2, 4],
    "sigma_theta_deg": [2, 10],
    "n_antennas": 16,
    "snapshots": [5, 10],
    "elevation_bins": 2
  }
}"#;

fn hmimo(args: &[&str], threads_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hmimo"));
    cmd.args(args).env_remove("HMIMO_THREADS");
    if let Some(t) = threads_env {
        cmd.env("HMIMO_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn runs_are_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    for exp in ["fig1", "fig3", "fig4"] {
        let a = dir.path().join(format!("{exp}-a"));
        let b = dir.path().join(format!("{exp}-b"));
        let out = hmimo(&["run", "--config", s(&cfg), "--experiment", exp, "--out", s(&a), "--threads", "1"], None);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let out = hmimo(&["run", "--config", s(&cfg), "--experiment", exp, "--out", s(&b)], Some("3"));
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let csv = format!("{exp}.csv");
        let (x, y) = (fs::read(a.join(&csv)).unwrap(), fs::read(b.join(&csv)).unwrap());
        assert!(!x.is_empty());
        assert_eq!(x, y, "{exp} differs between thread counts");
        assert!(a.join("plot").join(format!("{exp}.gp")).exists());
    }
}

#[test]
fn seed_flag_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let run = |seed: &str, out: &str| {
        let out_dir = dir.path().join(out);
        let o = hmimo(&["run", "--config", s(&cfg), "--experiment", "fig1", "--seed", seed, "--out", s(&out_dir)], None);
        assert!(o.status.success());
        fs::read_to_string(out_dir.join("fig1.csv")).unwrap()
    };
    assert_ne!(run("1", "s1"), run("2", "s2"));
    assert_eq!(run("1", "s1"), run("1", "s1b"));
}

#[test]
fn validate_and_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), "good.json", SMALL);
    let out = hmimo(&["validate", "--config", s(&good)], None);
    assert_eq!(out.status.code(), Some(0));

    let unknown = write_config(dir.path(), "unknown.json", r#"{"n_drop": 3}"#);
    assert_eq!(hmimo(&["validate", "--config", s(&unknown)], None).status.code(), Some(2));

    let empty_sweep = write_config(dir.path(), "empty.json", r#"{"sweeps": {"snapshots": []}}"#);
    assert_eq!(hmimo(&["validate", "--config", s(&empty_sweep)], None).status.code(), Some(2));

    // No experiment in the config and none on the command line.
    let out = hmimo(&["run", "--config", s(&good), "--out", s(dir.path())], None);
    assert_eq!(out.status.code(), Some(2));

    let missing = dir.path().join("nope.json");
    assert_eq!(hmimo(&["validate", "--config", s(&missing)], None).status.code(), Some(2));

    let out = hmimo(&["run", "--config", s(&good), "--experiment", "fig9"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_reports_seed_path() {
    let dir = tempfile::tempdir().unwrap();
    // A nearly rank-one covariance with a vanishing noise floor leaves the
    // perfect-statistics MMSE solve singular.
    let cfg = write_config(
        dir.path(),
        "singular.json",
        r#"{
  "experiment": "fig1",
  "n_drops": 2,
  "physical": { "angular_spread_deg": 0.01, "noise_power_dbm": -300 },
  "sweeps": { "l_over_lambda": [16] }
}"#,
    );
    let out = hmimo(&["run", "--config", s(&cfg), "--out", s(dir.path())], None);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("seed=1/experiment=1/sweep=1/trial="), "{stderr}");
}

#[test]
fn plotdata_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let out_dir = dir.path().join("run");
    assert!(hmimo(&["run", "--config", s(&cfg), "--experiment", "fig2", "--out", s(&out_dir)], None)
        .status
        .success());
    let plot = dir.path().join("plot2");
    let out = hmimo(&["plotdata", "--csv", s(&out_dir.join("fig2.csv")), "--out", s(&plot)], None);
    assert!(out.status.success());
    let dat = fs::read_to_string(plot.join("fig2.dat")).unwrap();
    assert!(dat.starts_with("# sigma_theta_deg DFT_Mperfect ISO_Mperfect LS_Mperfect LoS_Mperfect MMSE_Mperfect"));
    assert_eq!(dat.lines().count(), 3);

    let bad = write_config(dir.path(), "bad.csv", "not,a,result\n");
    let out = hmimo(&["plotdata", "--csv", s(&bad), "--out", s(&plot)], None);
    assert!(!out.status.success());
}
