use std::fs;
use std::path::Path;
use std::process::Command;

use slcarma::diagnostics::Class;
use slcarma_cli::commands::{self, reproduce};
use slcarma_cli::config::Simulator;
use slcarma_cli::{exit, ExperimentConfig, Failure, Overrides};

const ZERO_MASS: &str = include_str!("../configs/zero_mass.json");

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_slcarma"));
    c.env("RUST_LOG", "error");
    c
}

fn reference_in(dir: &Path) -> ExperimentConfig {
    ExperimentConfig::reference()
        .apply(&Overrides {
            out: Some(dir.to_path_buf()),
            ..Default::default()
        })
        .unwrap()
}

#[test]
fn config_round_trip() {
    for text in [slcarma_cli::config::REFERENCE_CONFIG, ZERO_MASS] {
        let cfg = ExperimentConfig::from_json(text).unwrap();
        let again = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.to_json().unwrap(), again.to_json().unwrap());
    }
}

#[test]
fn sampling_must_cover_whole_periods() {
    let mut v: serde_json::Value = serde_json::from_str(slcarma_cli::config::REFERENCE_CONFIG).unwrap();
    v["sampling"]["n"] = 479.into();
    let err = ExperimentConfig::from_json(&v.to_string()).unwrap_err();
    assert!(matches!(&err, Failure::Validation(m) if m.contains("sampling.n")), "{err}");
    v["sampling"]["n"] = 480.into();
    v["sampling"]["delta"] = 0.7.into();
    assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
    v["sampling"]["delta"] = 0.5.into();
    v["sampling"]["n"] = 960.into();
    assert!(ExperimentConfig::from_json(&v.to_string()).is_ok());
}

#[test]
fn field_level_validation_messages() {
    let mut v: serde_json::Value = serde_json::from_str(slcarma_cli::config::REFERENCE_CONFIG).unwrap();
    v["diagnostics"]["alpha"] = 1.5.into();
    let err = ExperimentConfig::from_json(&v.to_string()).unwrap_err();
    assert!(err.to_string().contains("diagnostics.alpha"));
    let mut v: serde_json::Value = serde_json::from_str(slcarma_cli::config::REFERENCE_CONFIG).unwrap();
    v["subordinator"]["partition"]["lengths"][0] = (-2.0).into();
    assert_eq!(ExperimentConfig::from_json(&v.to_string()).unwrap_err().exit_code(), exit::VALIDATION);
    let mut v: serde_json::Value = serde_json::from_str(slcarma_cli::config::REFERENCE_CONFIG).unwrap();
    v["extra"] = 1.into();
    assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
}

#[test]
fn simulate_writes_full_grid_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    commands::simulate(&reference_in(&a), 1).unwrap();
    commands::simulate(&reference_in(&b), 1).unwrap();
    for name in ["trajectory.csv", "subordinator.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let traj = fs::read_to_string(a.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count(), 481);
    assert!(traj.starts_with("time,Y,X_1,X_2,X_3\n0,"));
    assert!(traj.lines().last().unwrap().starts_with("479,"));
}

#[test]
fn seeds_and_paths_are_independent_of_scheduling() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = reference_in(dir.path());
    let files = commands::simulate(&cfg, 3).unwrap();
    assert_eq!(files.len(), 6);
    let single = commands::realize(&cfg, 0).unwrap();
    let mut buf = Vec::new();
    single.trajectory.write_csv(&mut buf).unwrap();
    assert_eq!(fs::read(dir.path().join("trajectory_0000.csv")).unwrap(), buf);
    let other = cfg.clone().apply(&Overrides { seed: Some(cfg.seed + 1), ..Default::default() }).unwrap();
    assert_ne!(commands::realize(&other, 0).unwrap().trajectory.outputs, single.trajectory.outputs);
}

#[test]
fn zero_mass_gives_pure_drift_response() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::from_json(ZERO_MASS).unwrap();
    cfg.output_dir = dir.path().to_path_buf();
    cfg.simulator = Simulator::Exact;
    commands::simulate(&cfg, 1).unwrap();
    let sub = fs::read_to_string(dir.path().join("subordinator.csv")).unwrap();
    assert_eq!(sub, "time,jump,cumulative_S\n");
    // a(z) = (z + 1)(z + 1/2), γ = 1: Y(t) = 2 - 4 e^{-t/2} + 2 e^{-t}
    let r = commands::realize(&cfg, 0).unwrap();
    for (t, y) in r.trajectory.times.iter().zip(&r.trajectory.outputs) {
        let want = 2.0 - 4.0 * (-t / 2.0).exp() + 2.0 * (-t).exp();
        assert!((y - want).abs() < 1e-12, "t {t}");
    }
    commands::moments(&cfg).unwrap();
    let mean = fs::read_to_string(dir.path().join("mean.csv")).unwrap();
    for line in mean.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((cols[1] - 2.0).abs() < 1e-12 && cols[2].abs() < 1e-12, "{line}");
    }
}

#[test]
fn moments_files_cover_phase_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = reference_in(dir.path());
    commands::moments(&cfg).unwrap();
    let mean = fs::read_to_string(dir.path().join("mean.csv")).unwrap();
    assert_eq!(mean.lines().count(), 49);
    let auto = fs::read_to_string(dir.path().join("autocov.csv")).unwrap();
    assert_eq!(auto.lines().next(), Some("phase,lag,autocov_Y"));
    assert_eq!(auto.lines().count(), 1 + 48 * 5);
}

#[test]
fn series_files_are_read_by_column() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("plain.csv");
    fs::write(&plain, "1.5\n-2\n3e-1\n").unwrap();
    assert_eq!(commands::read_series(&plain).unwrap(), vec![1.5, -2.0, 0.3]);
    let headed = dir.path().join("headed.csv");
    fs::write(&headed, "time,Y,X_1\n0,4,1\n1,5,2\n").unwrap();
    assert_eq!(commands::read_series(&headed).unwrap(), vec![4.0, 5.0]);
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "Y\n1\nx\n").unwrap();
    assert!(matches!(commands::read_series(&bad), Err(Failure::Validation(_))));
    assert!(matches!(commands::read_series(&dir.path().join("missing.csv")), Err(Failure::Io(_))));
}

#[test]
fn reproduce_writes_artifacts_and_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = reference_in(dir.path());
    let report = reproduce(&cfg, 1, false).unwrap();
    assert!(report.passed());
    for name in [
        "config.json",
        "subordinator.csv",
        "trajectory.csv",
        "mean.csv",
        "autocov.csv",
        "coherence.csv",
        "acf.csv",
        "verdict.json",
    ] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let verdict: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verdict.json")).unwrap()).unwrap();
    assert_eq!(verdict["class"], "periodically_correlated");
    assert_eq!(verdict["period"], 12);
    assert_eq!(verdict["line_offsets"][0], 40);
    let coherence = fs::read_to_string(dir.path().join("coherence.csv")).unwrap();
    assert_eq!(coherence.lines().count(), 1 + 480 * 480);
}

#[test]
fn stationary_control_is_mostly_stationary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = reference_in(dir.path())
        .apply(&Overrides {
            stationary_control: true,
            ..Default::default()
        })
        .unwrap();
    assert_eq!(cfg.subordinator.partition().len(), 1);
    let report = reproduce(&cfg, 10, true).unwrap();
    assert!(report.passed(), "{} of {}", report.matched, report.paths);
    assert!(report.verdicts.iter().filter(|v| v.verdict.class == Class::Stationary).count() > 5);
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let ok = bin().args(["reproduce", "--out"]).arg(&out).output().unwrap();
    assert_eq!(ok.status.code(), Some(exit::OK), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(out.join("verdict.json").exists());

    let usage = bin().arg("frobnicate").output().unwrap();
    assert_eq!(usage.status.code(), Some(exit::USAGE));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"seed": 1}"#).unwrap();
    let invalid = bin().args(["simulate", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(invalid.status.code(), Some(exit::VALIDATION));

    let missing = bin().args(["moments", "--config"]).arg(dir.path().join("none.json")).output().unwrap();
    assert_eq!(missing.status.code(), Some(exit::IO));

    let mut v: serde_json::Value = serde_json::from_str(slcarma_cli::config::REFERENCE_CONFIG).unwrap();
    v["model"] = serde_json::json!({"roots": [[800.0, 0.0]], "b": [1.0]});
    let huge = dir.path().join("huge.json");
    fs::write(&huge, v.to_string()).unwrap();
    let numerical = bin().args(["simulate", "--config"]).arg(&huge).arg("--out").arg(dir.path().join("h")).output().unwrap();
    assert_eq!(numerical.status.code(), Some(exit::NUMERICAL), "{}", String::from_utf8_lossy(&numerical.stderr));

    let white = dir.path().join("white.csv");
    let noise: String = (0..480).map(|i| format!("{}\n", ((i * 7919) % 113) as f64 / 11.0)).collect();
    fs::write(&white, noise).unwrap();
    let diag = bin().args(["diagnose", "--series"]).arg(&white).arg("--out").arg(dir.path().join("d")).output().unwrap();
    assert_eq!(diag.status.code(), Some(exit::OK));

    let threads = bin().env("SLCARMA_THREADS", "zero").args(["reproduce", "--out"]).arg(&out).output().unwrap();
    assert_eq!(threads.status.code(), Some(exit::VALIDATION));
}
