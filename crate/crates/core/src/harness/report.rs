//! Experiment runner and report bundle emission.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::checks::{self, CheckContext, CheckReport, InvarianceOptions};
use super::config::{CheckSpec, ConfigError, ConfigIssue, ExperimentConfig, Thresholds, CHECK_NAMES};
use super::finiteness::{finiteness_probability, FinitenessEstimate, INCONCLUSIVE_FLAG_FRACTION};
use super::HarnessError;
use crate::analysis::{perpetual_verdict, VerdictReport};
use crate::montecarlo::{
    collect_path, rng::derive_seed, LevySource, SchemeInfo, SimOptions, Simulator, BANDWIDTH_FLOOR,
};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Output directory; `None` runs without writing files.
    pub out_dir: Option<PathBuf>,
    /// Check names to run instead of the configured list.
    pub checks: Option<Vec<String>>,
    /// Overrides the configured master seed.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub triplet_id: String,
    pub master_seed: u64,
    pub n_paths: usize,
    pub dt: f64,
    pub checkpoints: Vec<f64>,
    pub thresholds: Thresholds,
    pub scheme: Option<SchemeInfo>,
    /// Heuristics and defaults that are engineering choices.
    pub engineering_defaults: Value,
    pub verdict: VerdictReport,
    pub finiteness: Option<FinitenessEstimate>,
    pub checks: Vec<CheckReport>,
    pub all_ok: bool,
    pub artifacts: Vec<String>,
}

impl ExperimentReport {
    /// 0 iff every selected check met its expectation.
    pub fn exit_code(&self) -> i32 {
        if self.all_ok {
            0
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub name: String,
    pub triplet_id: String,
    pub master_seed: u64,
    pub scheme: SchemeInfo,
    pub engineering_defaults: Value,
    pub verdict: VerdictReport,
    pub finiteness: FinitenessEstimate,
    pub artifacts: Vec<String>,
}

fn engineering_defaults(config: &ExperimentConfig) -> Value {
    let t = &config.thresholds;
    json!({
        "path_classification": {
            "finite_like": "last two checkpoint increments below tol_abs + tol_rel * value",
            "infinite_like": "last increment positive and at least growth_ratio times the previous one",
            "tol_abs": t.tol_abs,
            "tol_rel": t.tol_rel,
            "growth_ratio": t.growth_ratio,
            "inconclusive_flag_fraction": INCONCLUSIVE_FLAG_FRACTION,
        },
        "ks_threshold": "asymptotic two-sample critical value",
        "bandwidth_floor": format!("{BANDWIDTH_FLOOR} * diffusion * sqrt(dt)"),
        "passage_cap": "10 (z + s2/mu) / mu",
        "rho_level": "max(1, 100 s2/mu), gated by KS against twice the level",
        "linf_stop_level": "max x + bandwidth + 5 s2/mu",
        "lln_envelope_t0": "max(1, 50 s2/mu^2), checked on [t0, 4 t0]",
        "overshoot_levels": "z1 = max(10, 20 s2/mu), z2 = 2 z1",
    })
}

/// The checks to run: named ones (configured options first, defaults
/// otherwise) or the configured list, or every check if none is configured.
pub fn resolve_checks(config: &ExperimentConfig, names: Option<&[String]>) -> Result<Vec<CheckSpec>, ConfigError> {
    let Some(names) = names else {
        if config.checks.is_empty() {
            return Ok(CHECK_NAMES.iter().filter_map(|n| CheckSpec::default_for(n)).collect());
        }
        return Ok(config.checks.clone());
    };
    let mut out = Vec::new();
    let mut issues = Vec::new();
    for name in names {
        let configured: Vec<_> = config.checks.iter().filter(|c| c.name() == name).cloned().collect();
        if !configured.is_empty() {
            out.extend(configured);
        } else if let Some(c) = CheckSpec::default_for(name) {
            out.push(c);
        } else {
            issues.push(ConfigIssue {
                field: "checks".into(),
                message: format!("unknown check `{name}`; expected one of {}", CHECK_NAMES.join(", ")),
            });
        }
    }
    if issues.is_empty() {
        Ok(out)
    } else {
        Err(ConfigError::Invalid(issues))
    }
}

fn needs_estimate(spec: &CheckSpec) -> bool {
    matches!(
        spec,
        CheckSpec::ZeroOne { .. } | CheckSpec::TheoremConsistency { .. } | CheckSpec::DivergenceGrowth { .. }
    )
}

fn sim_options(config: &ExperimentConfig) -> SimOptions {
    SimOptions {
        dt: config.dt,
        cutoff: config.cutoff,
    }
}

fn default_bandwidth(scheme: Option<&SchemeInfo>) -> f64 {
    let floor = scheme.map_or(0.0, |s| BANDWIDTH_FLOOR * s.diffusion * s.dt.sqrt());
    0.05f64.max(2.0 * floor)
}

fn positive_mean(config: &ExperimentConfig) -> Result<f64, HarnessError> {
    match config.triplet.mean().finite() {
        Some(mu) if mu > 0.0 => Ok(mu),
        _ => Err(HarnessError::PreconditionViolation(format!(
            "mean must be finite and positive, got {:?}",
            config.triplet.mean()
        ))),
    }
}

fn run_check(
    spec: &CheckSpec,
    config: &ExperimentConfig,
    estimate: Option<&Result<FinitenessEstimate, HarnessError>>,
    scheme: Option<&SchemeInfo>,
    ctx: &CheckContext,
) -> Result<CheckReport, HarnessError> {
    let t = &config.triplet;
    let th = &config.thresholds;
    let estimate = || -> Result<&FinitenessEstimate, HarnessError> {
        match estimate {
            Some(Ok(e)) => Ok(e),
            Some(Err(e)) => Err(HarnessError::InvalidArgument(format!(
                "finiteness estimate failed: {e}"
            ))),
            None => Err(HarnessError::InvalidArgument("finiteness estimate missing".into())),
        }
    };
    match spec {
        CheckSpec::ZeroOne { .. } => Ok(checks::zero_one_check(estimate()?, th.delta_01)),
        CheckSpec::TheoremConsistency { .. } => Ok(checks::theorem_consistency_check(
            t,
            &config.f,
            estimate()?,
            th.delta_01,
        )),
        CheckSpec::OccupationIdentity {
            n_paths,
            horizon,
            bandwidth,
            ..
        } => checks::occupation_identity_check(
            t,
            &config.f,
            n_paths.unwrap_or(50),
            horizon.unwrap_or_else(|| config.horizon_schedule.horizon()),
            bandwidth.unwrap_or_else(|| default_bandwidth(scheme)),
            ctx,
        ),
        CheckSpec::OvershootStationarity { z1, z2, n, .. } => {
            let mu = positive_mean(config)?;
            let z1 = z1.unwrap_or_else(|| (20.0 * t.effective_variance() / mu).max(10.0));
            checks::overshoot_stationarity_check(t, z1, z2.unwrap_or(2.0 * z1), n.unwrap_or(10_000), ctx)
        }
        CheckSpec::LocalTimeInvariance {
            x_list,
            n,
            bandwidth,
            start,
            ks_threshold,
            ..
        } => {
            let opts = InvarianceOptions {
                bandwidth: bandwidth.unwrap_or_else(|| default_bandwidth(scheme)),
                start: *start,
                ks_threshold: *ks_threshold,
                restart_level: 1.0,
            };
            let xs = x_list.clone().unwrap_or_else(|| vec![1.0, 2.0, 5.0]);
            checks::local_time_invariance_check(t, &xs, n.unwrap_or(5000), opts, ctx)
        }
        CheckSpec::LlnEnvelope { t0, n, .. } => {
            let t0 = match t0 {
                Some(v) => *v,
                None => checks::lln_default_t0(t)?,
            };
            checks::lln_envelope_check(t, t0, n.unwrap_or(1000), ctx)
        }
        CheckSpec::DivergenceGrowth {
            tolerance, doublings, ..
        } => checks::divergence_growth_check(
            t,
            &config.f,
            estimate()?,
            tolerance.unwrap_or(0.1),
            doublings.unwrap_or(2),
            th.tol_abs,
        ),
    }
}

fn check_seed(master: u64, spec: &CheckSpec, occurrence: u64) -> u64 {
    let kind = CHECK_NAMES.iter().position(|n| *n == spec.name()).unwrap_or(0) as u64;
    derive_seed(master, ((kind + 1) << 32) | occurrence)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn write_metadata(dir: &Path) -> Result<(), HarnessError> {
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    write_json(
        &dir.join("metadata.json"),
        &json!({
            "timestamp_unix": timestamp,
            "threads": rayon::current_num_threads(),
            "version": env!("CARGO_PKG_VERSION"),
        }),
    )
}

/// Writes the ensemble CSV and the first `dump_paths` paths; returns their
/// relative names.
fn write_ensemble(
    config: &ExperimentConfig,
    est: &FinitenessEstimate,
    dir: &Path,
) -> Result<Vec<String>, HarnessError> {
    let mut artifacts = vec!["ensemble.csv".to_string()];
    est.write_csv(BufWriter::new(File::create(dir.join("ensemble.csv"))?))?;
    if config.dump_paths > 0 {
        std::fs::create_dir_all(dir.join("paths"))?;
        let source = LevySource::new(&config.triplet, sim_options(config), 0.0, config.master_seed)?;
        for i in 0..config.dump_paths.min(config.n_paths) {
            let rel = format!("paths/path_{i:04}.csv");
            let path = collect_path(&source, i as u64, config.horizon_schedule.horizon())?;
            path.write_csv(BufWriter::new(File::create(dir.join(&rel))?))?;
            artifacts.push(rel);
        }
    }
    Ok(artifacts)
}

/// Runs the selected checks and, with an output directory, writes
/// `report.json`, `metadata.json` and CSV artifacts.
pub fn run_experiment(config: &ExperimentConfig, options: &RunOptions) -> Result<ExperimentReport, HarnessError> {
    let mut config = config.clone();
    if let Some(seed) = options.seed {
        config.master_seed = seed;
    }
    config.validate()?;
    let specs = resolve_checks(&config, options.checks.as_deref())?;
    if let Some(dir) = &options.out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let scheme = Simulator::new(&config.triplet, sim_options(&config))
        .ok()
        .map(|s| s.info());
    let estimate = specs
        .iter()
        .any(needs_estimate)
        .then(|| finiteness_probability(&config));

    let mut occurrence = vec![0u64; CHECK_NAMES.len()];
    let jobs: Vec<(usize, &CheckSpec, CheckContext)> = specs
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let kind = CHECK_NAMES.iter().position(|n| *n == spec.name()).unwrap_or(0);
            let occ = occurrence[kind];
            occurrence[kind] += 1;
            let mut ctx = CheckContext::new(
                sim_options(&config),
                check_seed(config.master_seed, spec, occ),
                config.thresholds.ks_alpha,
            );
            ctx.tol_abs = config.thresholds.tol_abs;
            ctx.artifacts = options.out_dir.clone().map(|d| (d, format!("{i:02}_{}_", spec.name())));
            (i, spec, ctx)
        })
        .collect();
    let reports: Vec<CheckReport> = jobs
        .par_iter()
        .map(|(_, spec, ctx)| {
            let r = run_check(spec, &config, estimate.as_ref(), scheme.as_ref(), ctx)
                .unwrap_or_else(|e| CheckReport::failed(spec.name(), &e));
            r.expecting_fail(spec.expected_fail())
        })
        .collect();

    let mut artifacts = Vec::new();
    if let (Some(dir), Some(Ok(est))) = (&options.out_dir, &estimate) {
        artifacts = write_ensemble(&config, est, dir)?;
    }
    let report = ExperimentReport {
        name: config.name.clone(),
        triplet_id: config.triplet.fingerprint(),
        master_seed: config.master_seed,
        n_paths: config.n_paths,
        dt: config.dt,
        checkpoints: config.checkpoints(),
        thresholds: config.thresholds,
        scheme,
        engineering_defaults: engineering_defaults(&config),
        verdict: perpetual_verdict(&config.triplet, &config.f),
        finiteness: estimate.and_then(|e| e.ok()),
        all_ok: reports.iter().all(|r| r.ok),
        checks: reports,
        artifacts,
    };
    if let Some(dir) = &options.out_dir {
        write_json(&dir.join("report.json"), &report)?;
        write_metadata(dir)?;
    }
    Ok(report)
}

/// Simulates the path ensemble only, writing `simulation.json`,
/// `metadata.json`, `ensemble.csv` and any dumped paths.
pub fn simulate(
    config: &ExperimentConfig,
    out_dir: Option<&Path>,
    seed: Option<u64>,
) -> Result<SimulationReport, HarnessError> {
    let mut config = config.clone();
    if let Some(seed) = seed {
        config.master_seed = seed;
    }
    config.validate()?;
    let scheme = Simulator::new(&config.triplet, sim_options(&config))?.info();
    let est = finiteness_probability(&config)?;
    let mut artifacts = Vec::new();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        artifacts = write_ensemble(&config, &est, dir)?;
    }
    let report = SimulationReport {
        name: config.name.clone(),
        triplet_id: config.triplet.fingerprint(),
        master_seed: config.master_seed,
        scheme,
        engineering_defaults: engineering_defaults(&config),
        verdict: perpetual_verdict(&config.triplet, &config.f),
        finiteness: est,
        artifacts,
    };
    if let Some(dir) = out_dir {
        write_json(&dir.join("simulation.json"), &report)?;
        write_metadata(dir)?;
    }
    Ok(report)
}
