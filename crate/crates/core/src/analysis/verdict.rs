//! Almost-sure finiteness verdict for `int_0^inf f(xi_s) ds`.

use serde::{Deserialize, Serialize};

use super::local_time::{local_time_criterion, LocalTimeDecision, LocalTimeOptions, LocalTimeOutcome};
use super::potential::potential_sup_bound;
use super::tail::{tail_integral_test, ConvergenceDecision, ConvergenceVerdict, TailTestOptions};
use super::test_function::TestFunction;
use super::AnalysisError;
use crate::levy::{ClassificationFlags, LevyTriplet, ValidationIssue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    AsFinite,
    AsInfinite,
    Undecided,
}

/// Named reasons for an undecided verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum UndecidedReason {
    InvalidTriplet,
    InvalidFunction,
    MeanNotFinitePositive,
    IsCompoundPoisson,
    NoLocalTimes,
    LocalTimesUndecided,
    TailTestUndecided,
}

impl UndecidedReason {
    pub fn as_str(self) -> &'static str {
        match self {
            UndecidedReason::InvalidTriplet => "INVALID_TRIPLET",
            UndecidedReason::InvalidFunction => "INVALID_FUNCTION",
            UndecidedReason::MeanNotFinitePositive => "MEAN_NOT_FINITE_POSITIVE",
            UndecidedReason::IsCompoundPoisson => "IS_COMPOUND_POISSON",
            UndecidedReason::NoLocalTimes => "NO_LOCAL_TIMES",
            UndecidedReason::LocalTimesUndecided => "LOCAL_TIMES_UNDECIDED",
            UndecidedReason::TailTestUndecided => "TAIL_TEST_UNDECIDED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreconditionRecord {
    /// Absent when the triplet failed validation.
    pub classification: Option<ClassificationFlags>,
    pub local_times: Option<LocalTimeOutcome>,
    pub local_time_exponent: Option<f64>,
    pub triplet_issues: Vec<ValidationIssue>,
    pub function_issues: Vec<ValidationIssue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralRecord {
    pub verdict: ConvergenceVerdict,
    pub value: f64,
    pub error_estimate: f64,
    pub blocks_used: usize,
}

impl From<&ConvergenceDecision> for IntegralRecord {
    fn from(d: &ConvergenceDecision) -> Self {
        Self {
            verdict: d.verdict,
            value: d.value_or_lower_bound,
            error_estimate: d.error_estimate,
            blocks_used: d.blocks_used,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub verdict: Verdict,
    /// Every failing precondition, empty when the verdict is decisive.
    pub reasons: Vec<UndecidedReason>,
    pub preconditions: PreconditionRecord,
    pub integral: Option<IntegralRecord>,
}

impl VerdictReport {
    pub fn preconditions_hold(&self) -> bool {
        !self.reasons.iter().any(|r| *r != UndecidedReason::TailTestUndecided)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VerdictOptions {
    pub local_time: LocalTimeOptions,
    pub tail: TailTestOptions,
}

pub fn perpetual_verdict(triplet: &LevyTriplet, f: &TestFunction) -> VerdictReport {
    perpetual_verdict_with(triplet, f, VerdictOptions::default())
}

pub fn perpetual_verdict_with(triplet: &LevyTriplet, f: &TestFunction, options: VerdictOptions) -> VerdictReport {
    let mut reasons = Vec::new();
    let triplet_issues = triplet.validate();
    let function_issues = f.validate();

    let mut classification = None;
    let mut lt: Option<LocalTimeDecision> = None;
    if triplet_issues.is_empty() {
        let flags = triplet.classify();
        if !flags.mean_is_finite_positive {
            reasons.push(UndecidedReason::MeanNotFinitePositive);
        }
        if flags.is_compound_poisson {
            reasons.push(UndecidedReason::IsCompoundPoisson);
        }
        classification = Some(flags);
        match local_time_criterion(triplet, options.local_time) {
            Ok(d) => {
                match d.outcome {
                    LocalTimeOutcome::HasLocalTimes => {}
                    LocalTimeOutcome::NoLocalTimes => reasons.push(UndecidedReason::NoLocalTimes),
                    LocalTimeOutcome::Undecided => reasons.push(UndecidedReason::LocalTimesUndecided),
                }
                lt = Some(d);
            }
            Err(_) => reasons.push(UndecidedReason::LocalTimesUndecided),
        }
    } else {
        reasons.push(UndecidedReason::InvalidTriplet);
    }

    let mut integral = None;
    if function_issues.is_empty() {
        match tail_integral_test(f, options.tail) {
            Ok(d) => {
                if d.verdict == ConvergenceVerdict::Undecided {
                    reasons.push(UndecidedReason::TailTestUndecided);
                }
                integral = Some(d);
            }
            Err(_) => reasons.push(UndecidedReason::TailTestUndecided),
        }
    } else {
        reasons.push(UndecidedReason::InvalidFunction);
    }

    let verdict = match (&integral, reasons.is_empty()) {
        (Some(d), true) if d.verdict == ConvergenceVerdict::Converges => Verdict::AsFinite,
        (Some(d), true) if d.verdict == ConvergenceVerdict::Diverges => Verdict::AsInfinite,
        _ => Verdict::Undecided,
    };
    VerdictReport {
        verdict,
        reasons,
        preconditions: PreconditionRecord {
            classification,
            local_times: lt.as_ref().map(|d| d.outcome),
            local_time_exponent: lt.as_ref().map(|d| d.tail_exponent),
            triplet_issues,
            function_issues,
        },
        integral: integral.as_ref().map(IntegralRecord::from),
    }
}

/// `sup_x u(x) * int_R f`, an upper bound for `E int_0^inf f(xi_s) ds`.
///
/// Infinite when `f` has infinite mass on the negative half-line.
pub fn expectation_upper_bound(triplet: &LevyTriplet, f: &TestFunction) -> Result<f64, AnalysisError> {
    let report = perpetual_verdict(triplet, f);
    if report.verdict != Verdict::AsFinite {
        let why: Vec<&str> = report.reasons.iter().map(|r| r.as_str()).collect();
        let tail = report.integral.as_ref().map(|i| i.verdict);
        return Err(AnalysisError::PreconditionViolation(format!(
            "verdict is {:?} (reasons: [{}], tail test: {:?})",
            report.verdict,
            why.join(", "),
            tail
        )));
    }
    let mass = f.total_integral().unwrap_or(f64::INFINITY);
    if mass == 0.0 {
        return Ok(0.0);
    }
    Ok(potential_sup_bound(triplet)? * mass)
}
