use std::fs;
use std::path::PathBuf;

use bosonlab::error::LabError;
use bosonlab::harness::{
    emit_plots, read_summary, run, ExperimentConfig, ExperimentKind, ProfileSpec, RunOptions, SUMMARY_SCHEMA,
};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn small_condensation() -> ExperimentConfig {
    let mut c = ExperimentConfig::load(&configs().join("condensation.toml")).unwrap();
    c.fock.modes = 5;
    c.time.t_final = 0.05;
    c
}

#[test]
fn shipped_configs_round_trip_canonically() {
    let mut seen = 0;
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let config = ExperimentConfig::load(&path).unwrap();
        let canonical = config.to_canonical_string().unwrap();
        let again = ExperimentConfig::from_toml_str(&canonical).unwrap();
        assert_eq!(again, config, "{}", path.display());
        assert_eq!(again.to_canonical_string().unwrap(), canonical);
        seen += 1;
    }
    assert!(seen >= 6);
}

#[test]
fn verify_run_passes_and_writes_report() {
    let config = ExperimentConfig::load(&configs().join("verify.toml")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = run(&config, dir.path(), &RunOptions::default()).unwrap();
    assert!(summary.passed, "{:?}", summary.assertions);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.len() > 20);
    for c in checks {
        assert!(c["residual"].as_f64().unwrap() < 1e-10 || c["name"].as_str().unwrap().contains("sqrt"));
        for key in ["name", "dims", "residual", "tolerance", "passed"] {
            assert!(c.get(key).is_some(), "{key} missing");
        }
    }
    let back = read_summary(dir.path()).unwrap();
    assert_eq!(back.schema, SUMMARY_SCHEMA);
    assert_eq!(back.config_hash, config.canonical_hash().unwrap());
    assert_eq!(fs::read_to_string(dir.path().join("config.toml")).unwrap(), config.to_canonical_string().unwrap());
}

#[test]
fn blowup_without_interaction_reports_no_detection() {
    let mut config = ExperimentConfig::new(ExperimentKind::Blowup, ProfileSpec::Zero);
    config.grid.length = 16.0;
    config.grid.points = 64;
    config.time.t_final = 0.2;
    config.time.dt = 1e-3;
    let dir = tempfile::tempdir().unwrap();
    let summary = run(&config, dir.path(), &RunOptions::default()).unwrap();
    assert!(summary.passed);
    assert_eq!(summary.assertions[0].name, "no_blowup");
    assert!(summary.assertions[0].detail.starts_with("no detection"));
    let csv = fs::read_to_string(dir.path().join("blowup.csv")).unwrap();
    assert!(csv.starts_with("t,h1,sup,tail\n"));
}

#[test]
fn failed_expectation_fails_the_run() {
    let mut config = ExperimentConfig::new(ExperimentKind::Blowup, ProfileSpec::Zero);
    config.grid.points = 64;
    config.time.t_final = 0.05;
    config.assertions.expect_blowup = Some(true);
    let dir = tempfile::tempdir().unwrap();
    let summary = run(&config, dir.path(), &RunOptions::default()).unwrap();
    assert!(!summary.passed);
    assert_eq!(summary.failed().next().unwrap().name, "blowup_detected");
}

#[test]
fn rate_study_refuses_a_single_n() {
    let mut config = ExperimentConfig::load(&configs().join("rate.toml")).unwrap();
    config.scaling.particles = vec![16];
    let dir = tempfile::tempdir().unwrap();
    match run(&config, dir.path(), &RunOptions::default()) {
        Err(LabError::Config { field, .. }) => assert_eq!(field, "scaling.particles"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn condensation_outputs_are_byte_identical_across_worker_counts() {
    let config = small_condensation();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(&config, a.path(), &RunOptions { workers: Some(1), ..Default::default() }).unwrap();
    run(&config, b.path(), &RunOptions { workers: Some(3), ..Default::default() }).unwrap();
    for n in &config.scaling.particles {
        let name = format!("condensation_N{n}.csv");
        let left = fs::read(a.path().join(&name)).unwrap();
        assert_eq!(left, fs::read(b.path().join(&name)).unwrap(), "{name}");
        assert!(String::from_utf8(left).unwrap().starts_with("t,trace_distance,depletion,kinetic_excess,energy\n"));
    }
    assert_eq!(
        fs::read(a.path().join("summary.json")).unwrap(),
        fs::read(b.path().join("summary.json")).unwrap()
    );
}

#[test]
fn norm_approx_artifacts_feed_the_plots() {
    let mut config = small_condensation();
    config.experiment.kind = ExperimentKind::NormApprox;
    let dir = tempfile::tempdir().unwrap();
    let summary = run(&config, dir.path(), &RunOptions::default()).unwrap();
    for name in ["initial_vacuum", "norm_drift", "no_cutoff_leak"] {
        assert!(summary.assertions.iter().any(|a| a.name == name && a.passed), "{name}");
    }
    let csv = fs::read_to_string(dir.path().join("norm_approx_N2.csv")).unwrap();
    let steps = (config.time.t_final / config.time.dt).round() as usize;
    assert_eq!(csv.lines().count(), steps + 2);
    let files = emit_plots(dir.path()).unwrap();
    assert!(files.iter().any(|f| f.ends_with("number_N3.dat")));
    assert!(files.iter().any(|f| f.ends_with("number.plt")));
}

#[test]
fn basis_cap_is_enforced() {
    let config = small_condensation();
    let dir = tempfile::tempdir().unwrap();
    let options = RunOptions {
        basis_cap: Some(5),
        ..Default::default()
    };
    assert!(matches!(run(&config, dir.path(), &options), Err(LabError::BasisTooLarge { .. })));
}
