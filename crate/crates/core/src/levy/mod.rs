//! Lévy processes described by their characteristic triplet.
//!
//! The drift is always relative to the `|x| < 1` truncation, so
//! `Psi(l) = -i b l + sigma^2 l^2 / 2 + int (1 - e^{ilx} + i l x 1{|x|<1}) nu(dx)`.

mod jump_law;
mod measure;

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use jump_law::{JumpLaw, JumpSign};
pub use measure::{LevyMeasureSpec, PowerLaw, PreparedMeasure};

/// Relative tolerance for deciding that a drift exactly cancels the small-jump
/// compensator (pure compound Poisson paths).
const COMPENSATION_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum LevyError {
    #[error("invalid triplet: {}", format_issues(.0))]
    NonFiniteParameter(Vec<ValidationIssue>),
    #[error("malformed triplet JSON: {0}")]
    Json(#[from] serde_json::Error),
}

fn format_issues(issues: &[ValidationIssue]) -> String {
    issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
}

/// Machine-readable validation failure codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCode {
    NegativeGaussian,
    NonFiniteParameter,
    AlphaRange,
    SkewRange,
    NonPositiveScale,
    NonPositiveRate,
    NonPositiveTempering,
    NonPositiveTheta,
    ProbabilityRange,
    EmptyInterval,
}

impl IssueCode {
    pub fn as_str(self) -> &'static str {
        match self {
            IssueCode::NegativeGaussian => "NEGATIVE_GAUSSIAN",
            IssueCode::NonFiniteParameter => "NON_FINITE_PARAMETER",
            IssueCode::AlphaRange => "ALPHA_RANGE",
            IssueCode::SkewRange => "SKEW_RANGE",
            IssueCode::NonPositiveScale => "NON_POSITIVE_SCALE",
            IssueCode::NonPositiveRate => "NON_POSITIVE_RATE",
            IssueCode::NonPositiveTempering => "NON_POSITIVE_TEMPERING",
            IssueCode::NonPositiveTheta => "NON_POSITIVE_THETA",
            IssueCode::ProbabilityRange => "PROBABILITY_RANGE",
            IssueCode::EmptyInterval => "EMPTY_INTERVAL",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub code: IssueCode,
    pub field: String,
    pub message: String,
}

impl ValidationIssue {
    pub(crate) fn new(code: IssueCode, field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            code,
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.code.as_str(), self.field, self.message)
    }
}

/// Real number extended with signed infinities and an explicit "undefined"
/// (divergent integral with both signs infinite).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ExtendedReal {
    Finite(f64),
    PosInfinity,
    NegInfinity,
    Undefined,
}

impl ExtendedReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite_positive(self) -> bool {
        matches!(self, ExtendedReal::Finite(v) if v > 0.0)
    }

    fn add_finite(self, x: f64) -> Self {
        match self {
            ExtendedReal::Finite(v) => ExtendedReal::Finite(v + x),
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyTriplet {
    pub drift: f64,
    /// Gaussian coefficient sigma^2.
    pub gaussian: f64,
    pub levy_measure: LevyMeasureSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationFlags {
    pub is_compound_poisson: bool,
    pub is_subordinator: bool,
    pub is_spectrally_negative: bool,
    pub mean: ExtendedReal,
    /// Also the transience criterion used throughout.
    pub mean_is_finite_positive: bool,
}

impl LevyTriplet {
    pub fn new(drift: f64, gaussian: f64, levy_measure: LevyMeasureSpec) -> Self {
        Self {
            drift,
            gaussian,
            levy_measure,
        }
    }

    pub fn pure_drift(drift: f64) -> Self {
        Self::new(drift, 0.0, LevyMeasureSpec::None {})
    }

    pub fn brownian(drift: f64, gaussian: f64) -> Self {
        Self::new(drift, gaussian, LevyMeasureSpec::None {})
    }

    /// Compound Poisson process with no drift between jumps.
    pub fn compound_poisson(rate: f64, jump_law: JumpLaw) -> Self {
        let drift = rate * jump_law.truncated_mean(1.0);
        Self::new(drift, 0.0, LevyMeasureSpec::CompoundPoisson { rate, jump_law })
    }

    pub fn from_json(s: &str) -> Result<Self, LevyError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("triplet serializes")
    }

    /// Every violated invariant; empty when the triplet is well formed.
    pub fn validate(&self) -> Vec<ValidationIssue> {
        let mut issues = Vec::new();
        if !self.drift.is_finite() {
            issues.push(ValidationIssue::new(
                IssueCode::NonFiniteParameter,
                "drift",
                format!("drift {} is not finite", self.drift),
            ));
        }
        if !self.gaussian.is_finite() {
            issues.push(ValidationIssue::new(
                IssueCode::NonFiniteParameter,
                "gaussian",
                format!("gaussian coefficient {} is not finite", self.gaussian),
            ));
        } else if self.gaussian < 0.0 {
            issues.push(ValidationIssue::new(
                IssueCode::NegativeGaussian,
                "gaussian",
                format!("gaussian coefficient must be >= 0, got {}", self.gaussian),
            ));
        }
        self.levy_measure.validate(&mut issues);
        issues
    }

    pub fn ensure_valid(&self) -> Result<(), LevyError> {
        let issues = self.validate();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(LevyError::NonFiniteParameter(issues))
        }
    }

    /// `mu = drift + int_{|x| >= 1} x nu(dx)`.
    pub fn mean(&self) -> ExtendedReal {
        self.levy_measure.tail_first_moment().add_finite(self.drift)
    }

    /// Drift left once small jumps are uncompensated; defined only for
    /// bounded-variation jump parts.
    pub fn effective_drift(&self) -> Option<f64> {
        self.levy_measure.bv_compensator().map(|c| self.drift - c)
    }

    /// Variance scale used for default horizons and levels:
    /// `sigma^2 + int x^2 nu` when finite, else `sigma^2 + int_{|x|<1} x^2 nu`.
    pub fn effective_variance(&self) -> f64 {
        self.gaussian
            + self
                .levy_measure
                .second_moment()
                .unwrap_or_else(|| self.levy_measure.small_jump_variance(1.0))
    }

    pub fn classify(&self) -> ClassificationFlags {
        let m = &self.levy_measure;
        let no_gaussian = self.gaussian == 0.0;
        let b0 = self.effective_drift();
        let is_compound_poisson = no_gaussian
            && m.is_finite_activity()
            && b0.is_some_and(|b| b.abs() <= COMPENSATION_TOL * self.drift.abs().max(1.0));
        let is_subordinator = no_gaussian
            && !m.has_negative_jumps()
            && b0.is_some_and(|b| b >= -COMPENSATION_TOL * self.drift.abs().max(1.0));
        let mean = self.mean();
        ClassificationFlags {
            is_compound_poisson,
            is_subordinator,
            is_spectrally_negative: !m.has_positive_jumps(),
            mean,
            mean_is_finite_positive: mean.is_finite_positive(),
        }
    }

    /// Fingerprint of the canonical JSON form (FNV-1a, hex).
    pub fn fingerprint(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.to_json().bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}

/// Characteristic exponent with measure constants prepared once.
#[derive(Debug, Clone)]
pub struct CharExponent {
    drift: f64,
    gaussian: f64,
    measure: PreparedMeasure,
}

impl CharExponent {
    pub fn new(triplet: &LevyTriplet) -> Result<Self, LevyError> {
        triplet.ensure_valid()?;
        Ok(Self {
            drift: triplet.drift,
            gaussian: triplet.gaussian,
            measure: PreparedMeasure::new(&triplet.levy_measure),
        })
    }

    pub fn eval(&self, lambda: f64) -> Complex64 {
        Complex64::new(0.5 * self.gaussian * lambda * lambda, -self.drift * lambda) + self.measure.exponent(lambda)
    }
}

/// `Psi(lambda) = -log E[exp(i lambda xi_1)]`.
pub fn char_exponent(triplet: &LevyTriplet, lambda: f64) -> Result<Complex64, LevyError> {
    Ok(CharExponent::new(triplet)?.eval(lambda))
}

pub fn mean(triplet: &LevyTriplet) -> ExtendedReal {
    triplet.mean()
}

pub fn classify(triplet: &LevyTriplet) -> ClassificationFlags {
    triplet.classify()
}

pub fn validate(triplet: &LevyTriplet) -> Result<(), Vec<ValidationIssue>> {
    let issues = triplet.validate();
    if issues.is_empty() {
        Ok(())
    } else {
        Err(issues)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_cp(rate: f64, theta: f64, sign: JumpSign) -> LevyMeasureSpec {
        LevyMeasureSpec::CompoundPoisson {
            rate,
            jump_law: JumpLaw::Exponential { theta, sign },
        }
    }

    #[test]
    fn pure_drift_exponent() {
        let psi = char_exponent(&LevyTriplet::pure_drift(1.0), 3.0).unwrap();
        assert_eq!(psi, Complex64::new(0.0, -3.0));
    }

    #[test]
    fn exponent_vanishes_at_zero() {
        let triplets = [
            LevyTriplet::brownian(0.3, 2.0),
            LevyTriplet::new(0.1, 0.0, exp_cp(1.0, 2.0, JumpSign::Positive)),
            LevyTriplet::new(
                1.0,
                0.0,
                LevyMeasureSpec::StableLike {
                    alpha: 1.5,
                    scale: 1.0,
                    skew: 0.3,
                },
            ),
            LevyTriplet::new(
                0.0,
                0.5,
                LevyMeasureSpec::TemperedStable {
                    alpha: 0.6,
                    scale: 1.0,
                    tempering: 1.0,
                    skew: -0.4,
                },
            ),
            LevyTriplet::new(
                2.0,
                0.0,
                LevyMeasureSpec::SpectrallyNegativeStable { alpha: 1.7, scale: 0.5 },
            ),
        ];
        for t in &triplets {
            assert_eq!(char_exponent(t, 0.0).unwrap(), Complex64::new(0.0, 0.0), "{t:?}");
        }
    }

    #[test]
    fn gaussian_exponent() {
        let psi = char_exponent(&LevyTriplet::brownian(0.0, 1.0), 2.0).unwrap();
        assert_eq!(psi, Complex64::new(2.0, 0.0));
    }

    #[test]
    fn invalid_triplet_rejected_by_exponent() {
        let t = LevyTriplet::brownian(0.0, -1.0);
        assert!(matches!(char_exponent(&t, 1.0), Err(LevyError::NonFiniteParameter(_))));
    }

    #[test]
    fn mean_examples() {
        assert_eq!(LevyTriplet::pure_drift(1.0).mean(), ExtendedReal::Finite(1.0));
        let sym = LevyTriplet::new(
            0.7,
            0.0,
            LevyMeasureSpec::StableLike {
                alpha: 1.5,
                scale: 1.0,
                skew: 0.0,
            },
        );
        assert_eq!(sym.mean(), ExtendedReal::Finite(0.7));
        // drift 0.5 + 2 * E[J; J >= 1] for J ~ Exp(4).
        let cp = LevyTriplet::new(0.5, 0.0, exp_cp(2.0, 4.0, JumpSign::Positive));
        let expected = 0.5 + 2.0 * (-4.0f64).exp() * (1.0 + 0.25);
        assert!((cp.mean().finite().unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn classify_examples() {
        let cp = LevyTriplet::compound_poisson(
            1.0,
            JumpLaw::Exponential {
                theta: 2.0,
                sign: JumpSign::Positive,
            },
        );
        let f = cp.classify();
        assert!(f.is_compound_poisson);
        assert!(f.is_subordinator);
        assert!(f.mean_is_finite_positive);

        let bm = LevyTriplet::brownian(1.0, 1.0);
        let f = bm.classify();
        assert!(f.is_spectrally_negative && !f.is_compound_poisson && !f.is_subordinator);

        let sub = LevyTriplet::new(1.0, 0.0, exp_cp(1.0, 1.0, JumpSign::Positive));
        let f = sub.classify();
        assert!(f.is_subordinator && !f.is_compound_poisson && !f.is_spectrally_negative);

        // Drift too small to cover the compensator: paths decrease between jumps.
        let not_sub = LevyTriplet::new(0.1, 0.0, exp_cp(1.0, 1.0, JumpSign::Positive));
        assert!(!not_sub.classify().is_subordinator);
    }

    #[test]
    fn validate_reports_codes() {
        let issues = LevyTriplet::brownian(0.0, -1.0).validate();
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].code, IssueCode::NegativeGaussian);

        let t = LevyTriplet::new(
            0.0,
            0.0,
            LevyMeasureSpec::StableLike {
                alpha: 2.5,
                scale: 1.0,
                skew: 0.0,
            },
        );
        assert_eq!(t.validate()[0].code, IssueCode::AlphaRange);

        assert!(validate(&LevyTriplet::brownian(1.0, 1.0)).is_ok());

        let t = LevyTriplet::new(
            f64::NAN,
            0.0,
            LevyMeasureSpec::CompoundPoisson {
                rate: -1.0,
                jump_law: JumpLaw::TwoSidedExponential {
                    theta_plus: 0.0,
                    theta_minus: 1.0,
                    p_plus: 2.0,
                },
            },
        );
        let codes: Vec<_> = t.validate().into_iter().map(|i| i.code).collect();
        assert_eq!(
            codes,
            vec![
                IssueCode::NonFiniteParameter,
                IssueCode::NonPositiveRate,
                IssueCode::NonPositiveTheta,
                IssueCode::ProbabilityRange
            ]
        );
    }

    #[test]
    fn json_shape() {
        let t = LevyTriplet::new(0.1, 0.0, exp_cp(1.0, 2.0, JumpSign::Positive));
        let v: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(v["levy_measure"]["family"], "compound_poisson");
        assert_eq!(v["levy_measure"]["params"]["jump_law"]["law"], "exponential");
        assert_eq!(v["levy_measure"]["params"]["jump_law"]["sign"], "+");
        let none = LevyTriplet::brownian(1.0, 1.0).to_json();
        assert_eq!(
            none,
            r#"{"drift":1.0,"gaussian":1.0,"levy_measure":{"family":"none","params":{}}}"#
        );
        assert_eq!(LevyTriplet::from_json(&none).unwrap(), LevyTriplet::brownian(1.0, 1.0));
    }
}
