//! Dyadic-block convergence test for `int_0^inf f(x) dx`.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use super::test_function::TestFunction;
use super::AnalysisError;
use crate::quadrature::{integrate_pieces, pairwise_sum, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ConvergenceVerdict {
    Converges,
    Diverges,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailTestOptions {
    /// Required geometric margin and relative remainder.
    pub tol: f64,
    /// Cumulative value treated as certified divergence.
    pub divergence_threshold: f64,
    pub max_blocks: usize,
}

impl Default for TailTestOptions {
    fn default() -> Self {
        Self {
            tol: 1e-2,
            divergence_threshold: 1e6,
            max_blocks: 1000,
        }
    }
}

impl TailTestOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceDecision {
    pub verdict: ConvergenceVerdict,
    /// Integral value when converging, otherwise a lower bound.
    pub value_or_lower_bound: f64,
    pub error_estimate: f64,
    pub blocks_used: usize,
    /// Block sums over `[0, 1]`, `[1, 2]`, `[2, 4]`, ...
    pub block_sums: Vec<f64>,
}

const NON_DECREASING_RUN: usize = 6;
const ZERO_RUN: usize = 4;
const RATIO_SPAN: usize = 3;

/// Upper bound on `sum_{j > K} B_j` from the last blocks, or infinity when
/// neither a geometric nor a power-in-k model is integrable.
fn remainder_bound(sums: &[f64], tol: f64) -> Option<f64> {
    let k = sums.len() - 1;
    let (b_now, b_then) = (sums[k], sums[k - RATIO_SPAN]);
    if b_now == 0.0 {
        return Some(0.0);
    }
    if b_then <= 0.0 {
        return None;
    }
    let q = (b_now / b_then).powf(1.0 / RATIO_SPAN as f64);
    if q.is_nan() || q >= 1.0 - tol {
        return None;
    }
    let geometric = b_now * q / (1.0 - q);
    // Blocks decaying like k^{-s} leave roughly B_K K / (s - 1).
    let kf = k as f64;
    let s = (b_then / b_now).ln() / (kf / (kf - RATIO_SPAN as f64)).ln();
    if s.is_nan() || s <= 1.0 {
        return None;
    }
    let power = b_now * kf / (s - 1.0);
    Some(geometric.max(power))
}

pub fn tail_integral_test(f: &TestFunction, options: TailTestOptions) -> Result<ConvergenceDecision, AnalysisError> {
    let issues = f.validate();
    if !issues.is_empty() {
        return Err(AnalysisError::InvalidFunction(issues));
    }
    let TailTestOptions {
        tol,
        divergence_threshold,
        max_blocks,
    } = options;
    if !(tol > 0.0 && tol < 1.0) {
        return Err(AnalysisError::InvalidArgument(format!(
            "tol must lie in (0, 1), got {tol}"
        )));
    }

    let breakpoints = f.breakpoints();
    let last_break = breakpoints.last().copied().unwrap_or(0.0);
    let asymptotic_from = (8.0 * f.tail_scale()).max(last_break);
    let bad_value = Cell::new(None);
    let g = |x: f64| {
        let v = f.eval(x);
        if !(v.is_finite() && v >= 0.0) && bad_value.get().is_none() {
            bad_value.set(Some((x, v)));
        }
        // Keep the quadrature running; the offending point is reported below.
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let quad_tol = Tolerance::new(1e-300, 1e-10).with_max_intervals(500);

    let mut sums: Vec<f64> = Vec::new();
    let mut errors: Vec<f64> = Vec::new();
    let mut verdict = ConvergenceVerdict::Undecided;
    let mut remainder = 0.0;
    for k in 0..max_blocks {
        let (lo, hi) = if k == 0 {
            (0.0, 1.0)
        } else {
            (2f64.powi(k as i32 - 1), 2f64.powi(k as i32))
        };
        if !hi.is_finite() {
            break;
        }
        let mut pts = vec![lo];
        pts.extend(breakpoints.iter().copied().filter(|&p| p > lo && p < hi));
        pts.push(hi);
        let r = integrate_pieces(g, &pts, quad_tol);
        if let Some((x, v)) = bad_value.get() {
            return Err(AnalysisError::EvaluationError { x, value: v });
        }
        let r = r.map_err(|e| AnalysisError::QuadratureFailure(e.to_string()))?;
        sums.push(r.value.max(0.0));
        errors.push(r.error);

        let total = pairwise_sum(&sums);
        if hi < asymptotic_from || sums.len() <= NON_DECREASING_RUN {
            continue;
        }
        if total >= divergence_threshold {
            verdict = ConvergenceVerdict::Diverges;
            break;
        }
        let recent = &sums[sums.len() - NON_DECREASING_RUN..];
        if recent[0] > 0.0 && recent.windows(2).all(|w| w[1] >= w[0]) {
            verdict = ConvergenceVerdict::Diverges;
            break;
        }
        if sums[sums.len() - ZERO_RUN..].iter().all(|&b| b == 0.0) {
            verdict = ConvergenceVerdict::Converges;
            break;
        }
        if let Some(rem) = remainder_bound(&sums, tol) {
            if rem <= tol * total {
                verdict = ConvergenceVerdict::Converges;
                remainder = rem;
                break;
            }
        }
    }

    let total = pairwise_sum(&sums);
    let quad_error = pairwise_sum(&errors);
    Ok(ConvergenceDecision {
        verdict,
        value_or_lower_bound: total,
        error_estimate: match verdict {
            ConvergenceVerdict::Converges => quad_error + remainder,
            _ => quad_error,
        },
        blocks_used: sums.len(),
        block_sums: sums,
    })
}
