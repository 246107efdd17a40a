//! Verification experiments: configuration, checks and report bundles.

mod checks;
mod config;
mod finiteness;
mod report;

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::montecarlo::McError;

pub use checks::{
    divergence_growth_check, lln_default_t0, lln_envelope_check, local_time_invariance_check,
    occupation_identity_check, overshoot_stationarity_check, rho_level, theorem_consistency_check, zero_one_check,
    CheckContext, CheckReport, InvarianceOptions,
};
pub use config::{
    parse_json, CheckSpec, ConfigError, ConfigIssue, ExperimentConfig, HorizonSchedule, StartLaw, Thresholds,
    CHECK_NAMES,
};
pub use finiteness::{
    classify_path, finiteness_probability, FinitenessEstimate, PathVerdict, INCONCLUSIVE_FLAG_FRACTION,
};
pub use report::{resolve_checks, run_experiment, simulate, ExperimentReport, RunOptions, SimulationReport};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    MonteCarlo(#[from] McError),
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// Process exit code: 2 for configuration errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 1,
        }
    }
}
