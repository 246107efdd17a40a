use std::path::PathBuf;

use perpetua::analysis::TestFunction;
use perpetua::harness::{
    finiteness_probability, lln_envelope_check, run_experiment, CheckContext, CheckSpec, ConfigError, ExperimentConfig,
    HarnessError, HorizonSchedule, PathVerdict, RunOptions, Thresholds,
};
use perpetua::montecarlo::SimOptions;
use perpetua::LevyTriplet;

fn config(triplet: LevyTriplet, f: TestFunction) -> ExperimentConfig {
    ExperimentConfig {
        name: "test".into(),
        triplet,
        f,
        n_paths: 100,
        dt: 0.01,
        horizon_schedule: HorizonSchedule { t0: 2.0, doublings: 5 },
        master_seed: 3,
        thresholds: Thresholds::default(),
        checks: vec![],
        dump_paths: 0,
        cutoff: None,
    }
}

fn benchmarks() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/benchmarks/v1")
}

#[test]
fn pure_drift_is_finite_on_every_path() {
    let est = finiteness_probability(&config(LevyTriplet::pure_drift(1.0), TestFunction::exp_decay(1.0))).unwrap();
    assert_eq!(est.p_hat, Some(1.0));
    assert!(est.verdicts.iter().all(|v| *v == PathVerdict::FiniteLike));
    assert!(est.growth_curve.windows(2).all(|w| w[1] >= w[0]));
    // int_0^T exp(-s) ds
    for (c, g) in est.checkpoints.iter().zip(&est.growth_curve) {
        assert!((g - (1.0 - (-c).exp())).abs() < 1e-12);
    }
}

#[test]
fn growth_curve_is_monotone_and_grows_for_divergent_tail() {
    let est = finiteness_probability(&config(LevyTriplet::brownian(1.0, 1.0), TestFunction::power_tail(1.0))).unwrap();
    let g = &est.growth_curve;
    assert!(g.windows(2).all(|w| w[1] >= w[0]));
    let k = g.len();
    for j in k - 2..k {
        assert!(g[j] - g[j - 1] > 0.5, "{g:?}");
    }
    assert!(est.p_hat.unwrap() <= 0.05);
}

#[test]
fn every_benchmark_config_validates() {
    let index: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(benchmarks().join("index.json")).unwrap()).unwrap();
    let cells = index["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 28);
    for c in cells {
        let path = benchmarks().join(c["config"].as_str().unwrap());
        ExperimentConfig::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn expected_failure_inverts_the_exit_code() {
    let mut cfg = config(LevyTriplet::brownian(1.0, 1.0), TestFunction::exp_decay(1.0));
    cfg.checks = vec![
        CheckSpec::ZeroOne { expected_fail: false },
        // p_hat near 1 makes the consistency check pass, so expecting a
        // failure must flip the outcome.
        CheckSpec::TheoremConsistency { expected_fail: true },
    ];
    let r = run_experiment(&cfg, &RunOptions::default()).unwrap();
    assert!(r.checks[0].ok && r.checks[0].pass);
    assert!(r.checks[1].pass && !r.checks[1].ok);
    assert_eq!(r.exit_code(), 1);

    cfg.checks = vec![CheckSpec::OvershootStationarity {
        z1: Some(0.1),
        z2: Some(50.0),
        n: Some(5000),
        expected_fail: true,
    }];
    let jumps: LevyTriplet =
        serde_json::from_str(&std::fs::read_to_string(benchmarks().join("drift_exp_jumps__exp_decay.json")).unwrap())
            .map(|v: serde_json::Value| serde_json::from_value(v["triplet"].clone()).unwrap())
            .unwrap();
    cfg.triplet = jumps;
    let r = run_experiment(&cfg, &RunOptions::default()).unwrap();
    assert!(!r.checks[0].pass, "{:?}", r.checks[0]);
    assert_eq!(r.exit_code(), 0);
}

#[test]
fn reports_are_reproducible_on_disk() {
    let mut cfg = config(LevyTriplet::brownian(1.0, 1.0), TestFunction::exp_decay(1.0));
    cfg.dump_paths = 1;
    let dirs = [tempdir("a"), tempdir("b")];
    for d in &dirs {
        let opts = RunOptions {
            out_dir: Some(d.clone()),
            checks: Some(vec!["zero_one".into(), "lln_envelope".into()]),
            seed: Some(42),
        };
        let r = run_experiment(&cfg, &opts).unwrap();
        assert_eq!(r.master_seed, 42);
        assert!(r.artifacts.contains(&"ensemble.csv".to_string()));
    }
    let read = |d: &PathBuf, f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(read(&dirs[0], "report.json"), read(&dirs[1], "report.json"));
    assert_eq!(read(&dirs[0], "ensemble.csv"), read(&dirs[1], "ensemble.csv"));
    let csv = String::from_utf8(read(&dirs[0], "ensemble.csv")).unwrap();
    assert!(csv.starts_with("path_id,checkpoint,partial_integral\n"));
    assert!(String::from_utf8(read(&dirs[0], "paths/path_0000.csv"))
        .unwrap()
        .starts_with("time,value\n"));
    for d in &dirs {
        std::fs::remove_dir_all(d).unwrap();
    }
}

fn tempdir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("perpetua-harness-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

#[test]
fn zero_mean_fails_fast() {
    let ctx = CheckContext::new(SimOptions::default(), 1, 0.01);
    let e = lln_envelope_check(&LevyTriplet::brownian(0.0, 1.0), 50.0, 100, &ctx).unwrap_err();
    assert!(matches!(e, HarnessError::PreconditionViolation(_)));

    let mut cfg = config(LevyTriplet::brownian(0.0, 1.0), TestFunction::exp_decay(1.0));
    cfg.checks = vec![CheckSpec::LlnEnvelope {
        t0: None,
        n: None,
        expected_fail: false,
    }];
    let r = run_experiment(&cfg, &RunOptions::default()).unwrap();
    assert!(r.checks[0].error.as_deref().unwrap().contains("precondition"));
    assert_eq!(r.exit_code(), 1);
}

#[test]
fn invalid_configs_are_config_errors() {
    let mut cfg = config(LevyTriplet::brownian(1.0, 1.0), TestFunction::exp_decay(1.0));
    cfg.n_paths = 10;
    let e = run_experiment(&cfg, &RunOptions::default()).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    assert!(matches!(e, HarnessError::Config(ConfigError::Invalid(_))));

    let cfg = config(LevyTriplet::brownian(1.0, 1.0), TestFunction::exp_decay(1.0));
    let opts = RunOptions {
        checks: Some(vec!["nope".into()]),
        ..RunOptions::default()
    };
    assert_eq!(run_experiment(&cfg, &opts).unwrap_err().exit_code(), 2);
}
