//! Jump size laws for compound Poisson measures.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::{IssueCode, ValidationIssue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JumpSign {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
}

impl JumpSign {
    fn factor(self) -> f64 {
        match self {
            JumpSign::Positive => 1.0,
            JumpSign::Negative => -1.0,
        }
    }
}

/// Law of a single compound Poisson jump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum JumpLaw {
    Constant {
        value: f64,
    },
    /// `sign * E` with `E ~ Exp(theta)` (mean `1/theta`).
    Exponential {
        theta: f64,
        sign: JumpSign,
    },
    /// Positive `Exp(theta_plus)` with probability `p_plus`, otherwise
    /// negative `Exp(theta_minus)`.
    TwoSidedExponential {
        theta_plus: f64,
        theta_minus: f64,
        p_plus: f64,
    },
    Uniform {
        a: f64,
        b: f64,
    },
}

// E[E; E < h], E[E^2; E < h], P(E >= h) for E ~ Exp(theta).
fn exp_trunc_mean(theta: f64, h: f64) -> f64 {
    let th = theta * h;
    (1.0 - (-th).exp() * (1.0 + th)) / theta
}

fn exp_trunc_second(theta: f64, h: f64) -> f64 {
    let th = theta * h;
    (2.0 - (-th).exp() * (th * th + 2.0 * th + 2.0)) / (theta * theta)
}

fn exp_tail(theta: f64, h: f64) -> f64 {
    (-theta * h).exp()
}

impl JumpLaw {
    pub(crate) fn validate(&self, prefix: &str, issues: &mut Vec<ValidationIssue>) {
        let mut check = |ok: bool, code: IssueCode, field: &str, msg: String| {
            if !ok {
                issues.push(ValidationIssue::new(code, format!("{prefix}.{field}"), msg));
            }
        };
        match *self {
            JumpLaw::Constant { value } => {
                check(
                    value.is_finite(),
                    IssueCode::NonFiniteParameter,
                    "value",
                    format!("jump value {value} is not finite"),
                );
            }
            JumpLaw::Exponential { theta, .. } => {
                check(
                    theta.is_finite() && theta > 0.0,
                    IssueCode::NonPositiveTheta,
                    "theta",
                    format!("theta must be > 0, got {theta}"),
                );
            }
            JumpLaw::TwoSidedExponential {
                theta_plus,
                theta_minus,
                p_plus,
            } => {
                check(
                    theta_plus.is_finite() && theta_plus > 0.0,
                    IssueCode::NonPositiveTheta,
                    "theta_plus",
                    format!("theta_plus must be > 0, got {theta_plus}"),
                );
                check(
                    theta_minus.is_finite() && theta_minus > 0.0,
                    IssueCode::NonPositiveTheta,
                    "theta_minus",
                    format!("theta_minus must be > 0, got {theta_minus}"),
                );
                check(
                    (0.0..=1.0).contains(&p_plus),
                    IssueCode::ProbabilityRange,
                    "p_plus",
                    format!("p_plus must lie in [0, 1], got {p_plus}"),
                );
            }
            JumpLaw::Uniform { a, b } => {
                if !(a.is_finite() && b.is_finite()) {
                    check(
                        false,
                        IssueCode::NonFiniteParameter,
                        "a",
                        format!("bounds [{a}, {b}] are not finite"),
                    );
                } else {
                    check(
                        a < b,
                        IssueCode::EmptyInterval,
                        "b",
                        format!("need a < b, got [{a}, {b}]"),
                    );
                }
            }
        }
    }

    /// `E[exp(i lambda J)]`.
    pub fn char_fn(&self, lambda: f64) -> Complex64 {
        match *self {
            JumpLaw::Constant { value } => Complex64::from_polar(1.0, lambda * value),
            JumpLaw::Exponential { theta, sign } => theta / Complex64::new(theta, -sign.factor() * lambda),
            JumpLaw::TwoSidedExponential {
                theta_plus,
                theta_minus,
                p_plus,
            } => {
                p_plus * theta_plus / Complex64::new(theta_plus, -lambda)
                    + (1.0 - p_plus) * theta_minus / Complex64::new(theta_minus, lambda)
            }
            JumpLaw::Uniform { a, b } => {
                let w = lambda * (b - a);
                if w.abs() < 1e-8 {
                    let m = 0.5 * (a + b);
                    return Complex64::from_polar(1.0, lambda * m);
                }
                let num = Complex64::from_polar(1.0, lambda * b) - Complex64::from_polar(1.0, lambda * a);
                num / Complex64::new(0.0, w)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            JumpLaw::Constant { value } => value,
            JumpLaw::Exponential { theta, sign } => sign.factor() / theta,
            JumpLaw::TwoSidedExponential {
                theta_plus,
                theta_minus,
                p_plus,
            } => p_plus / theta_plus - (1.0 - p_plus) / theta_minus,
            JumpLaw::Uniform { a, b } => 0.5 * (a + b),
        }
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            JumpLaw::Constant { value } => value * value,
            JumpLaw::Exponential { theta, .. } => 2.0 / (theta * theta),
            JumpLaw::TwoSidedExponential {
                theta_plus,
                theta_minus,
                p_plus,
            } => 2.0 * p_plus / (theta_plus * theta_plus) + 2.0 * (1.0 - p_plus) / (theta_minus * theta_minus),
            JumpLaw::Uniform { a, b } => (a * a + a * b + b * b) / 3.0,
        }
    }

    /// `E[J; |J| < h]`.
    pub fn truncated_mean(&self, h: f64) -> f64 {
        match *self {
            JumpLaw::Constant { value } => {
                if value.abs() < h {
                    value
                } else {
                    0.0
                }
            }
            JumpLaw::Exponential { theta, sign } => sign.factor() * exp_trunc_mean(theta, h),
            JumpLaw::TwoSidedExponential {
                theta_plus,
                theta_minus,
                p_plus,
            } => p_plus * exp_trunc_mean(theta_plus, h) - (1.0 - p_plus) * exp_trunc_mean(theta_minus, h),
            JumpLaw::Uniform { a, b } => {
                let lo = a.max(-h);
                let hi = b.min(h);
                if hi > lo {
                    (hi * hi - lo * lo) / (2.0 * (b - a))
                } else {
                    0.0
                }
            }
        }
    }

    /// `E[J^2; |J| < h]`.
    pub fn truncated_second_moment(&self, h: f64) -> f64 {
        match *self {
            JumpLaw::Constant { value } => {
                if value.abs() < h {
                    value * value
                } else {
                    0.0
                }
            }
            JumpLaw::Exponential { theta, .. } => exp_trunc_second(theta, h),
            JumpLaw::TwoSidedExponential {
                theta_plus,
                theta_minus,
                p_plus,
            } => p_plus * exp_trunc_second(theta_plus, h) + (1.0 - p_plus) * exp_trunc_second(theta_minus, h),
            JumpLaw::Uniform { a, b } => {
                let lo = a.max(-h);
                let hi = b.min(h);
                if hi > lo {
                    (hi.powi(3) - lo.powi(3)) / (3.0 * (b - a))
                } else {
                    0.0
                }
            }
        }
    }

    /// `P(|J| >= h)`.
    pub fn tail_probability(&self, h: f64) -> f64 {
        match *self {
            JumpLaw::Constant { value } => {
                if value.abs() >= h {
                    1.0
                } else {
                    0.0
                }
            }
            JumpLaw::Exponential { theta, .. } => exp_tail(theta, h),
            JumpLaw::TwoSidedExponential {
                theta_plus,
                theta_minus,
                p_plus,
            } => p_plus * exp_tail(theta_plus, h) + (1.0 - p_plus) * exp_tail(theta_minus, h),
            JumpLaw::Uniform { a, b } => {
                let lo = a.max(-h);
                let hi = b.min(h);
                1.0 - (hi - lo).max(0.0) / (b - a)
            }
        }
    }

    pub fn has_positive_mass(&self) -> bool {
        match *self {
            JumpLaw::Constant { value } => value > 0.0,
            JumpLaw::Exponential { sign, .. } => sign == JumpSign::Positive,
            JumpLaw::TwoSidedExponential { p_plus, .. } => p_plus > 0.0,
            JumpLaw::Uniform { b, .. } => b > 0.0,
        }
    }

    pub fn has_negative_mass(&self) -> bool {
        match *self {
            JumpLaw::Constant { value } => value < 0.0,
            JumpLaw::Exponential { sign, .. } => sign == JumpSign::Negative,
            JumpLaw::TwoSidedExponential { p_plus, .. } => p_plus < 1.0,
            JumpLaw::Uniform { a, .. } => a < 0.0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            JumpLaw::Constant { value } => value,
            JumpLaw::Exponential { theta, sign } => {
                let e: f64 = Exp1.sample(rng);
                sign.factor() * e / theta
            }
            JumpLaw::TwoSidedExponential {
                theta_plus,
                theta_minus,
                p_plus,
            } => {
                let up = rng.random::<f64>() < p_plus;
                let e: f64 = Exp1.sample(rng);
                if up {
                    e / theta_plus
                } else {
                    -e / theta_minus
                }
            }
            JumpLaw::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
        }
    }
}
