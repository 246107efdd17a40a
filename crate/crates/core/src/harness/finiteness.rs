//! Ensemble estimate of `P(int_0^inf f(xi_s) ds < inf)` from truncated integrals.

use std::io::Write;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::HarnessError;
use crate::montecarlo::{par_map, LevySource, PathSource, PerpetualAccumulator, SimOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PathVerdict {
    FiniteLike,
    InfiniteLike,
    Inconclusive,
}

/// Share of inconclusive paths above which the estimate is flagged.
pub const INCONCLUSIVE_FLAG_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinitenessEstimate {
    /// Finite-like share among decided paths; `None` if no path was decided.
    pub p_hat: Option<f64>,
    pub n_paths: usize,
    pub n_finite: usize,
    pub n_infinite: usize,
    pub n_inconclusive: usize,
    pub inconclusive_flag: bool,
    pub checkpoints: Vec<f64>,
    /// Ensemble mean of the partial integral at each checkpoint.
    pub growth_curve: Vec<f64>,
    #[serde(skip)]
    pub partials: Vec<Vec<f64>>,
    #[serde(skip)]
    pub verdicts: Vec<PathVerdict>,
}

/// Classifies one path from its partial integrals at the checkpoints.
///
/// Finite-like when the last two increments are both below
/// `tol_abs + tol_rel * value`; infinite-like when the last increment is
/// positive and at least `growth_ratio` times the one before.
pub fn classify_path(partials: &[f64], tol_abs: f64, tol_rel: f64, growth_ratio: f64) -> PathVerdict {
    let k = partials.len();
    if k < 3 || partials.iter().any(|p| !p.is_finite()) {
        return PathVerdict::Inconclusive;
    }
    let inc = |j: usize| partials[j] - partials[j - 1];
    let small = |j: usize| inc(j) < tol_abs + tol_rel * partials[j].abs();
    if small(k - 1) && small(k - 2) {
        PathVerdict::FiniteLike
    } else if inc(k - 1) > 0.0 && inc(k - 1) >= growth_ratio * inc(k - 2) {
        PathVerdict::InfiniteLike
    } else {
        PathVerdict::Inconclusive
    }
}

/// Simulates `config.n_paths` paths to the last checkpoint and classifies each.
pub fn finiteness_probability(config: &ExperimentConfig) -> Result<FinitenessEstimate, HarnessError> {
    let source = LevySource::new(
        &config.triplet,
        SimOptions {
            dt: config.dt,
            cutoff: config.cutoff,
        },
        0.0,
        config.master_seed,
    )?;
    let checkpoints = config.checkpoints();
    let horizon = config.horizon_schedule.horizon();
    let rows = par_map(config.n_paths as u64, |i| -> Result<Vec<f64>, HarnessError> {
        let mut acc = PerpetualAccumulator::new(&config.f, &checkpoints)?;
        source.run(i, horizon, &mut |s| {
            acc.push(s);
            ControlFlow::Continue(())
        })?;
        Ok(acc.finish())
    });
    let partials = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    let th = &config.thresholds;
    let verdicts: Vec<PathVerdict> = partials
        .iter()
        .map(|p| classify_path(p, th.tol_abs, th.tol_rel, th.growth_ratio))
        .collect();
    let count = |v: PathVerdict| verdicts.iter().filter(|&&x| x == v).count();
    let (n_finite, n_infinite, n_inconclusive) = (
        count(PathVerdict::FiniteLike),
        count(PathVerdict::InfiniteLike),
        count(PathVerdict::Inconclusive),
    );
    let decided = n_finite + n_infinite;
    let n = partials.len();
    let growth_curve = (0..checkpoints.len())
        .map(|j| partials.iter().map(|p| p[j]).sum::<f64>() / n as f64)
        .collect();
    Ok(FinitenessEstimate {
        p_hat: (decided > 0).then(|| n_finite as f64 / decided as f64),
        n_paths: n,
        n_finite,
        n_infinite,
        n_inconclusive,
        inconclusive_flag: n_inconclusive as f64 > INCONCLUSIVE_FLAG_FRACTION * n as f64,
        checkpoints,
        growth_curve,
        partials,
        verdicts,
    })
}

impl FinitenessEstimate {
    /// Long-format CSV with header `path_id,checkpoint,partial_integral`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["path_id", "checkpoint", "partial_integral"])?;
        for (i, row) in self.partials.iter().enumerate() {
            for (c, v) in self.checkpoints.iter().zip(row) {
                w.write_record([i.to_string(), c.to_string(), v.to_string()])?;
            }
        }
        w.flush().map_err(HarnessError::Io)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_classification() {
        let flat = [0.9, 0.99, 0.999_99, 1.0];
        assert_eq!(classify_path(&flat, 1e-3, 1e-2, 0.8), PathVerdict::FiniteLike);
        let log = [1.0, 1.69, 2.38, 3.07];
        assert_eq!(classify_path(&log, 1e-3, 1e-2, 0.8), PathVerdict::InfiniteLike);
        let shrinking = [1.0, 2.0, 2.5, 2.7];
        assert_eq!(classify_path(&shrinking, 1e-3, 1e-2, 0.8), PathVerdict::Inconclusive);
        assert_eq!(classify_path(&[1.0, 2.0], 1e-3, 1e-2, 0.8), PathVerdict::Inconclusive);
    }
}
