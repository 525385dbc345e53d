use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mmudn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmudn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_scenario(dir: &Path) -> String {
    let path = dir.join("scenario.toml");
    fs::write(
        &path,
        "num_ans = 3\nnum_ues = 5\nantennas_per_an = 16\ntarget_snr_db = 20.0\ncalibration_draws = 5000\n",
    )
    .unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn verify_reports_all_matched() {
    let out = mmudn(&["verify", "--snapshots", "6", "--seed", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("6/6 instances matched"), "{}", stdout(&out));
}

#[test]
fn snapshot_compares_schemes_and_writes_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(dir.path());
    let out_dir = dir.path().join("snap");
    let out = mmudn(&[
        "snapshot",
        "--config",
        &config,
        "--solver",
        "both",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    for line in [
        "baseline: min_rate",
        "milp: min_rate",
        "brute: min_rate",
        "milp vs baseline",
        "optimal,",
    ] {
        assert!(text.contains(line), "missing {line:?} in {text}");
    }
    for file in [
        "topology.csv",
        "baseline_association.csv",
        "milp_association.csv",
        "brute_association.csv",
    ] {
        assert!(out_dir.join(file).is_file(), "{file}");
    }
    let milp = fs::read_to_string(out_dir.join("milp_association.csv")).unwrap();
    assert_eq!(milp.lines().count(), 6);
}

#[test]
fn snapshot_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(dir.path());
    let a = mmudn(&["snapshot", "--config", &config, "--solver", "brute", "--index", "2"]);
    let b = mmudn(&["snapshot", "--config", &config, "--solver", "brute", "--index", "2"]);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn export_lp_to_file_and_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(dir.path());
    let file = dir.path().join("model.lp");
    let out = mmudn(&["export-lp", "--config", &config, "--out", file.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let written = fs::read_to_string(&file).unwrap();
    assert!(written.starts_with("\\") && written.contains("\nMaximize\n"), "{written}");
    assert!(written.contains("Binaries") && written.trim_end().ends_with("End"));

    let piped = mmudn(&["export-lp", "--config", &config]);
    assert_eq!(stdout(&piped), written);
}

#[test]
fn calibrate_prints_the_budget() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(dir.path());
    let out = mmudn(&["calibrate", "--config", &config]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let value = |key: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(key)).unwrap();
        line.split_whitespace().nth(1).unwrap().parse().unwrap()
    };
    let total = value("total_power_linear");
    let per_an = value("per_an_power_linear");
    assert!((total / per_an - 3.0).abs() < 1e-4);
    assert!((10.0 * (total * value("mean_gain")).log10() - 20.0).abs() < 1e-4);
    assert!(text.contains("validation_snr_db"));
}

#[test]
fn run_tiny_campaign_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.toml");
    let out_dir = dir.path().join("out");
    fs::write(
        &spec,
        "campaign = \"densification\"\nnum_ues = 4\nm_values = [2, 3]\nl_values = [16]\nsnr_db_values = [20.0]\nsnapshots = 3\n[scenario]\ncalibration_draws = 2000\n",
    )
    .unwrap();
    let out = mmudn(&[
        "run",
        "--config",
        spec.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--solver",
        "both",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("2 points, mean gain"));
    let snapshots = fs::read_to_string(out_dir.join("snapshots.csv")).unwrap();
    // Header plus three schemes for each of 2 points x 3 snapshots.
    assert_eq!(snapshots.lines().count(), 1 + 2 * 3 * 3);
    assert!(out_dir.join("aggregate.csv").is_file());
}

#[test]
fn errors_are_one_machine_readable_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "num_ans = [\nnum_ues = 2\n").unwrap();
    for args in [
        vec!["calibrate", "--config", bad.to_str().unwrap()],
        vec!["snapshot", "--config", "/nonexistent/scenario.toml"],
        vec!["verify", "--snapshots", "0"],
    ] {
        let out = mmudn(&args);
        assert!(!out.status.success(), "{args:?}");
        let err = stderr(&out);
        let lines: Vec<&str> = err.lines().filter(|l| l.starts_with("error ")).collect();
        assert_eq!(lines.len(), 1, "{err}");
        assert!(lines[0].starts_with("error kind="), "{err}");
        assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    }
    let out = mmudn(&["calibrate", "--config", bad.to_str().unwrap()]);
    assert!(stderr(&out).starts_with("error kind=invalid_config"));
    let out = mmudn(&["snapshot", "--config", "/nonexistent/scenario.toml"]);
    assert!(stderr(&out).starts_with("error kind=io"));
}
