//! Path simulation and pathwise estimators.

mod empirical;
mod passage;
mod path;
pub mod rng;
mod scheme;

use rayon::prelude::*;
use thiserror::Error;

use crate::levy::LevyError;

pub use empirical::{ks_critical_value, EmpiricalDistribution};
pub use passage::{
    collect_path, first_passage, first_passage_in, linf_stop_level, local_times_until, overshoot_ensemble,
    overshoot_ensemble_in, passage_cap, shifted_restart, FirstPassageSample, LevySource, PathSource, RestartSource,
};
pub use path::{
    local_time_field, perpetual_estimate, sample_path, sample_path_stream, Jump, LocalTimeField, OccupationAccumulator,
    PathSample, PerpetualAccumulator, BANDWIDTH_FLOOR,
};
pub use scheme::{SchemeInfo, Segment, SimOptions, Simulator};

#[derive(Debug, Error)]
pub enum McError {
    #[error(transparent)]
    Triplet(#[from] LevyError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("step too coarse: {expected_jumps} expected jumps per step exceeds {limit}")]
    StepTooCoarse { expected_jumps: f64, limit: f64 },
    #[error("bandwidth {bandwidth} below the floor {floor}")]
    BandwidthTooSmall { bandwidth: f64, floor: f64 },
    #[error("path {path} did not reach level {level} within time {cap}")]
    NotReached { path: u64, level: f64, cap: f64 },
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

/// `f(0), ..., f(n-1)` evaluated in parallel, returned in index order.
pub fn par_map<T: Send>(n: u64, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}
