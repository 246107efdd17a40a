//! Experiment configuration and its validation.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::TestFunction;
use crate::levy::LevyTriplet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonSchedule {
    /// First checkpoint `T0`; checkpoints are `T0 * 2^k` for `k = 0..=doublings`.
    pub t0: f64,
    pub doublings: u32,
}

impl HorizonSchedule {
    pub fn checkpoints(&self) -> Vec<f64> {
        (0..=self.doublings).map(|k| self.t0 * 2f64.powi(k as i32)).collect()
    }

    pub fn horizon(&self) -> f64 {
        self.t0 * 2f64.powi(self.doublings as i32)
    }
}

fn default_delta() -> f64 {
    0.05
}
fn default_growth() -> f64 {
    0.8
}
fn default_alpha() -> f64 {
    0.01
}
fn default_tol_abs() -> f64 {
    1e-3
}
fn default_tol_rel() -> f64 {
    1e-2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default = "default_delta")]
    pub delta_01: f64,
    /// A path is infinite-like when its last increment is at least this
    /// fraction of the previous one.
    #[serde(default = "default_growth")]
    pub growth_ratio: f64,
    #[serde(default = "default_alpha")]
    pub ks_alpha: f64,
    #[serde(default = "default_tol_abs")]
    pub tol_abs: f64,
    #[serde(default = "default_tol_rel")]
    pub tol_rel: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            delta_01: default_delta(),
            growth_ratio: default_growth(),
            ks_alpha: default_alpha(),
            tol_abs: default_tol_abs(),
            tol_rel: default_tol_rel(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartLaw {
    /// Empirical stationary overshoot law.
    #[default]
    Rho,
    /// The origin; a negative control for jump processes.
    Fixed,
}

/// A check and its options. Unset options fall back to defaults derived
/// from the triplet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    ZeroOne {
        #[serde(default)]
        expected_fail: bool,
    },
    TheoremConsistency {
        #[serde(default)]
        expected_fail: bool,
    },
    OccupationIdentity {
        #[serde(default)]
        n_paths: Option<usize>,
        #[serde(default)]
        horizon: Option<f64>,
        #[serde(default)]
        bandwidth: Option<f64>,
        #[serde(default)]
        expected_fail: bool,
    },
    OvershootStationarity {
        #[serde(default)]
        z1: Option<f64>,
        #[serde(default)]
        z2: Option<f64>,
        #[serde(default)]
        n: Option<usize>,
        #[serde(default)]
        expected_fail: bool,
    },
    LocalTimeInvariance {
        #[serde(default)]
        x_list: Option<Vec<f64>>,
        #[serde(default)]
        n: Option<usize>,
        #[serde(default)]
        bandwidth: Option<f64>,
        #[serde(default)]
        start: StartLaw,
        /// Overrides the asymptotic KS critical value.
        #[serde(default)]
        ks_threshold: Option<f64>,
        #[serde(default)]
        expected_fail: bool,
    },
    LlnEnvelope {
        #[serde(default)]
        t0: Option<f64>,
        #[serde(default)]
        n: Option<usize>,
        #[serde(default)]
        expected_fail: bool,
    },
    DivergenceGrowth {
        /// Relative tolerance on each increment.
        #[serde(default)]
        tolerance: Option<f64>,
        /// Number of trailing doublings compared.
        #[serde(default)]
        doublings: Option<usize>,
        #[serde(default)]
        expected_fail: bool,
    },
}

pub const CHECK_NAMES: [&str; 7] = [
    "zero_one",
    "theorem_consistency",
    "occupation_identity",
    "overshoot_stationarity",
    "local_time_invariance",
    "lln_envelope",
    "divergence_growth",
];

impl CheckSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CheckSpec::ZeroOne { .. } => "zero_one",
            CheckSpec::TheoremConsistency { .. } => "theorem_consistency",
            CheckSpec::OccupationIdentity { .. } => "occupation_identity",
            CheckSpec::OvershootStationarity { .. } => "overshoot_stationarity",
            CheckSpec::LocalTimeInvariance { .. } => "local_time_invariance",
            CheckSpec::LlnEnvelope { .. } => "lln_envelope",
            CheckSpec::DivergenceGrowth { .. } => "divergence_growth",
        }
    }

    pub fn expected_fail(&self) -> bool {
        match self {
            CheckSpec::ZeroOne { expected_fail }
            | CheckSpec::TheoremConsistency { expected_fail }
            | CheckSpec::OccupationIdentity { expected_fail, .. }
            | CheckSpec::OvershootStationarity { expected_fail, .. }
            | CheckSpec::LocalTimeInvariance { expected_fail, .. }
            | CheckSpec::LlnEnvelope { expected_fail, .. }
            | CheckSpec::DivergenceGrowth { expected_fail, .. } => *expected_fail,
        }
    }

    /// The check with all options at their defaults.
    pub fn default_for(name: &str) -> Option<Self> {
        let json = format!(r#"{{"check":"{name}"}}"#);
        serde_json::from_str(&json).ok()
    }
}

fn default_dt() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub triplet: LevyTriplet,
    pub f: TestFunction,
    pub n_paths: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub horizon_schedule: HorizonSchedule,
    pub master_seed: u64,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    /// Number of leading paths written as `time,value` CSV files.
    #[serde(default)]
    pub dump_paths: usize,
    /// Overrides the automatic small-jump cutoff.
    #[serde(default)]
    pub cutoff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigIssue {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, column {column}, at `{field}`: {message}")]
    Syntax {
        line: usize,
        column: usize,
        field: String,
        message: String,
    },
    #[error("invalid configuration: {}", .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<ConfigIssue>),
}

/// Parses JSON, reporting the failing field path with line and column.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, ConfigError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        ConfigError::Syntax {
            line: inner.line(),
            column: inner.column(),
            field,
            message: inner.to_string(),
        }
    })?;
    de.end().map_err(|e| ConfigError::Syntax {
        line: e.line(),
        column: e.column(),
        field: ".".into(),
        message: e.to_string(),
    })?;
    Ok(value)
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = parse_json(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn checkpoints(&self) -> Vec<f64> {
        self.horizon_schedule.checkpoints()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut issues = Vec::new();
        let mut push = |field: &str, message: String| {
            issues.push(ConfigIssue {
                field: field.into(),
                message,
            })
        };
        for i in self.triplet.validate() {
            push(&format!("triplet.{}", i.field), i.message);
        }
        for i in self.f.validate() {
            push(&i.field, i.message);
        }
        if self.n_paths < 100 {
            push("n_paths", format!("must be >= 100, got {}", self.n_paths));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            push("dt", format!("must be > 0, got {}", self.dt));
        }
        let hs = &self.horizon_schedule;
        if !(hs.t0 > 0.0 && hs.t0.is_finite()) {
            push("horizon_schedule.t0", format!("must be > 0, got {}", hs.t0));
        }
        if hs.doublings < 3 {
            push(
                "horizon_schedule.doublings",
                format!("must be >= 3, got {}", hs.doublings),
            );
        }
        if hs.t0 > 0.0 && self.dt > hs.t0 / 10.0 {
            push("dt", format!("must be <= t0 / 10 = {}", hs.t0 / 10.0));
        }
        let t = &self.thresholds;
        for (name, v) in [
            ("delta_01", t.delta_01),
            ("growth_ratio", t.growth_ratio),
            ("ks_alpha", t.ks_alpha),
            ("tol_abs", t.tol_abs),
            ("tol_rel", t.tol_rel),
        ] {
            if !(v > 0.0 && v < 1.0) {
                push(&format!("thresholds.{name}"), format!("must lie in (0, 1), got {v}"));
            }
        }
        if let Some(c) = self.cutoff {
            if !(c > 0.0 && c.is_finite()) {
                push("cutoff", format!("must be > 0, got {c}"));
            }
        }
        for (i, c) in self.checks.iter().enumerate() {
            let field = |f: &str| format!("checks[{i}].{f}");
            let positive = |v: Option<f64>| v.is_none_or(|v| v > 0.0 && v.is_finite());
            match c {
                CheckSpec::OccupationIdentity {
                    n_paths,
                    horizon,
                    bandwidth,
                    ..
                } => {
                    if n_paths == &Some(0) {
                        push(&field("n_paths"), "must be >= 1".into());
                    }
                    if !positive(*horizon) {
                        push(&field("horizon"), "must be > 0".into());
                    }
                    if !positive(*bandwidth) {
                        push(&field("bandwidth"), "must be > 0".into());
                    }
                }
                CheckSpec::OvershootStationarity { z1, z2, n, .. } => {
                    if !positive(*z1) || !positive(*z2) {
                        push(&field("z1"), "levels must be > 0".into());
                    }
                    if let (Some(a), Some(b)) = (z1, z2) {
                        if a >= b {
                            push(&field("z2"), format!("need z1 < z2, got {a} >= {b}"));
                        }
                    }
                    if n == &Some(0) {
                        push(&field("n"), "must be >= 1".into());
                    }
                }
                CheckSpec::LocalTimeInvariance {
                    x_list,
                    n,
                    bandwidth,
                    ks_threshold,
                    ..
                } => {
                    if let Some(xs) = x_list {
                        if xs.is_empty() || !xs.iter().all(|x| x.is_finite() && *x > 0.0) {
                            push(&field("x_list"), "needs positive finite levels".into());
                        }
                    }
                    if n == &Some(0) {
                        push(&field("n"), "must be >= 1".into());
                    }
                    if !positive(*bandwidth) || !positive(*ks_threshold) {
                        push(&field("bandwidth"), "bandwidth and ks_threshold must be > 0".into());
                    }
                }
                CheckSpec::LlnEnvelope { t0, n, .. } => {
                    if !positive(*t0) {
                        push(&field("t0"), "must be > 0".into());
                    }
                    if n == &Some(0) {
                        push(&field("n"), "must be >= 1".into());
                    }
                }
                CheckSpec::DivergenceGrowth {
                    tolerance, doublings, ..
                } => {
                    if !positive(*tolerance) {
                        push(&field("tolerance"), "must be > 0".into());
                    }
                    if let Some(d) = doublings {
                        if *d == 0 || *d > hs.doublings as usize {
                            push(&field("doublings"), format!("must lie in 1..={}", hs.doublings));
                        }
                    }
                }
                CheckSpec::ZeroOne { .. } | CheckSpec::TheoremConsistency { .. } => {}
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(issues))
        }
    }
}
