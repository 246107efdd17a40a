//! Existence of local times via `int_R Re(1 / (1 + Psi(r))) dr < inf`.

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::levy::{CharExponent, LevyTriplet};
use crate::quadrature::{integrate, Tolerance};

/// Number of trailing dyadic blocks used for the decay fit.
const FIT_BLOCKS: usize = 4;
/// Largest tolerated relative quadrature error on a fitted block.
const MAX_BLOCK_REL_ERROR: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LocalTimeOutcome {
    HasLocalTimes,
    NoLocalTimes,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeOptions {
    pub r_max: f64,
    pub tol: f64,
}

impl Default for LocalTimeOptions {
    fn default() -> Self {
        Self {
            r_max: 65_536.0,
            tol: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockIntegral {
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeDecision {
    pub outcome: LocalTimeOutcome,
    /// Fitted power `e` in `Re(1/(1+Psi(r))) ~ r^e`.
    pub tail_exponent: f64,
    /// `int_{-r_max}^{r_max} Re(1/(1+Psi))`.
    pub truncated_integral: f64,
    pub blocks: Vec<BlockIntegral>,
}

/// Least-squares slope of `ys` against `0, 1, 2, ...`.
pub(crate) fn ls_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let xbar = (n - 1.0) / 2.0;
    let ybar = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - xbar;
        num += dx * (y - ybar);
        den += dx * dx;
    }
    num / den
}

pub fn local_time_criterion(
    triplet: &LevyTriplet,
    options: LocalTimeOptions,
) -> Result<LocalTimeDecision, AnalysisError> {
    let LocalTimeOptions { r_max, tol } = options;
    if !(r_max >= 1e3 && r_max.is_finite()) {
        return Err(AnalysisError::InvalidArgument(format!(
            "r_max must be >= 1000, got {r_max}"
        )));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(AnalysisError::InvalidArgument(format!("tol must be > 0, got {tol}")));
    }
    let psi = CharExponent::new(triplet)?;
    // The integrand is even in r, so only [0, r_max] is integrated.
    let g = |r: f64| (1.0 / (1.0 + psi.eval(r))).re;

    let mut edges = vec![0.0, 1.0];
    while *edges.last().unwrap() * 2.0 <= r_max {
        edges.push(edges.last().unwrap() * 2.0);
    }
    let quad_tol = Tolerance::new(1e-300, 1e-6).with_max_intervals(50_000);
    let mut blocks = Vec::with_capacity(edges.len());
    for w in edges.windows(2) {
        let r = integrate(g, w[0], w[1], quad_tol).map_err(|e| AnalysisError::QuadratureFailure(e.to_string()))?;
        blocks.push(BlockIntegral {
            lo: w[0],
            hi: w[1],
            value: r.value,
            error: r.error,
        });
    }

    let tail = &blocks[blocks.len() - FIT_BLOCKS..];
    let logs: Vec<f64> = tail.iter().map(|b| b.value.max(f64::MIN_POSITIVE).log2()).collect();
    // Block k spans [2^k, 2^{k+1}], so a power r^e gives slope e + 1.
    let tail_exponent = ls_slope(&logs) - 1.0;
    let noisy = tail
        .iter()
        .any(|b| b.value.is_nan() || b.value <= 0.0 || b.error > MAX_BLOCK_REL_ERROR * b.value.abs());
    let outcome = if noisy {
        LocalTimeOutcome::Undecided
    } else if tail_exponent < -1.0 - tol {
        LocalTimeOutcome::HasLocalTimes
    } else if tail_exponent >= -1.0 + tol {
        LocalTimeOutcome::NoLocalTimes
    } else {
        LocalTimeOutcome::Undecided
    };
    let truncated_integral = 2.0 * crate::quadrature::pairwise_sum(&blocks.iter().map(|b| b.value).collect::<Vec<_>>());
    Ok(LocalTimeDecision {
        outcome,
        tail_exponent,
        truncated_integral,
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{JumpLaw, LevyMeasureSpec};

    fn stable(alpha: f64) -> LevyTriplet {
        LevyTriplet::new(
            0.0,
            0.0,
            LevyMeasureSpec::StableLike {
                alpha,
                scale: 1.0,
                skew: 0.0,
            },
        )
    }

    #[test]
    fn brownian_has_local_times() {
        let d = local_time_criterion(&LevyTriplet::brownian(3.0, 1.0), LocalTimeOptions::default()).unwrap();
        assert_eq!(d.outcome, LocalTimeOutcome::HasLocalTimes);
        assert!((d.tail_exponent + 2.0).abs() < 0.05, "{}", d.tail_exponent);
    }

    #[test]
    fn stable_rule() {
        for &(alpha, has) in &[(0.5, false), (0.8, false), (1.2, true), (1.5, true), (1.8, true)] {
            let d = local_time_criterion(&stable(alpha), LocalTimeOptions::default()).unwrap();
            let expected = if has {
                LocalTimeOutcome::HasLocalTimes
            } else {
                LocalTimeOutcome::NoLocalTimes
            };
            assert_eq!(d.outcome, expected, "alpha {alpha}: exponent {}", d.tail_exponent);
            assert!((d.tail_exponent + alpha).abs() < 0.05);
        }
    }

    #[test]
    fn pure_compound_poisson_has_none() {
        let t = LevyTriplet::compound_poisson(
            1.0,
            JumpLaw::Exponential {
                theta: 1.0,
                sign: crate::levy::JumpSign::Positive,
            },
        );
        let d = local_time_criterion(&t, LocalTimeOptions::default()).unwrap();
        assert_eq!(d.outcome, LocalTimeOutcome::NoLocalTimes);
    }

    #[test]
    fn argument_checks() {
        let t = LevyTriplet::brownian(1.0, 1.0);
        assert!(local_time_criterion(&t, LocalTimeOptions { r_max: 10.0, tol: 0.1 }).is_err());
        assert!(local_time_criterion(&t, LocalTimeOptions { r_max: 1e4, tol: 0.0 }).is_err());
    }

    #[test]
    fn slope_of_line() {
        assert!((ls_slope(&[1.0, 3.0, 5.0, 7.0]) - 2.0).abs() < 1e-15);
    }
}
