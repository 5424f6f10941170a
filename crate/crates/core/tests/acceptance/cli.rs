use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cavity-stirap"))
        .args(args)
        .env("CAVITY_STIRAP_OUT", out)
        .output()
        .expect("binary runs")
}

#[test]
fn list_names_every_preset() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["list"], dir.path());
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["h_counterintuitive", "h_nested", "double_stirap_lossy", "star_w", "cat_sign_couplings"] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["run", "h_epr", "--samples", "11", "--set", "G=6"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run_dir = dir.path().join("h_epr");
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(run_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["parameters"]["G"], 6.0);
    assert_eq!(summary["samples"], 11);
    let printed: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(printed, summary);

    let csv = fs::read_to_string(run_dir.join("trajectory.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 12);
    assert!(rows[0].starts_with("t,"));
    // 17 significant digits per value.
    let first = rows[1].split(',').next().unwrap();
    assert_eq!(first.split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
}

#[test]
fn out_flag_overrides_the_environment() {
    let (env_dir, flag_dir) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let o = cli(&["run", "star_w", "--samples", "3", "--out", flag_dir.path().to_str().unwrap()], env_dir.path());
    assert!(o.status.success());
    assert!(flag_dir.path().join("star_w/summary.json").exists());
    assert!(!env_dir.path().join("star_w").exists());
}

#[test]
fn exit_codes_separate_config_and_numerical_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli(&["run", "no_such_preset"], dir.path()).status.code(), Some(2));
    assert_eq!(cli(&["run", "star_w", "--set", "nope=1"], dir.path()).status.code(), Some(2));
    assert_eq!(cli(&["run", "star_w", "--set", "G"], dir.path()).status.code(), Some(2));
    assert_eq!(cli(&["frobnicate"], dir.path()).status.code(), Some(2));
    // A cutoff too small for the coherent state is a truncation failure.
    let o = cli(&["run", "cat_sign_couplings", "--set", "n_max=3"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn sweep_writes_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.json");
    fs::write(
        &config,
        r#"{"name": "w_vs_g", "preset": "star_w", "window": {"samples": 3},
            "sweep": [{"path": "params.G", "values": [3.0, 5.0]}]}"#,
    )
    .unwrap();
    let o = cli(&["sweep", config.to_str().unwrap(), "--workers", "2"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("w_vs_g/sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("params.G,fidelity,"));
    assert!(rows[1].starts_with("3.0000000000000000e0,"));
}
