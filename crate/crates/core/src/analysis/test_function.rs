//! Non-negative, locally integrable test functions with analytic tails.

use serde::{Deserialize, Serialize};

use crate::levy::{IssueCode, ValidationIssue};

/// Behaviour of `ExpDecay` on the negative half-line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeftExtension {
    /// `f(x) = 1` for `x < 0` (continuous extension).
    #[default]
    Flat,
    /// `f(x) = 0` for `x < 0`.
    Zero,
}

/// Extension of a tabulated function beyond its last knot `(x_n, v_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum TailModel {
    Zero,
    /// `v_n * exp(-rate (x - x_n))`.
    Exponential {
        rate: f64,
    },
    /// `v_n * (1 + x - x_n)^{-p}`.
    Power {
        p: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum TestFunction {
    /// `exp(-rate * x)` for `x >= 0`, extended to the left per `left`.
    ExpDecay {
        rate: f64,
        #[serde(default)]
        left: LeftExtension,
    },
    /// `(shift + |x|)^{-p}`.
    PowerTail {
        p: f64,
        #[serde(default = "one")]
        shift: f64,
    },
    /// `1 / ((2 + |x|) log^p(2 + |x|))`.
    LogPower {
        p: f64,
    },
    /// `1` on `[a, b]`, `0` elsewhere.
    Indicator {
        a: f64,
        b: f64,
    },
    /// Piecewise linear through the knots, `0` left of the first knot.
    Tabulated {
        knots: Vec<f64>,
        values: Vec<f64>,
        tail: TailModel,
    },
    Scaled {
        factor: f64,
        inner: Box<TestFunction>,
    },
    Sum {
        terms: Vec<TestFunction>,
    },
}

// Antiderivative pieces, each vanishing at the origin of its variable.
fn power_primitive(p: f64, shift: f64, y: f64) -> f64 {
    if (p - 1.0).abs() < 1e-14 {
        ((shift + y) / shift).ln()
    } else {
        ((shift + y).powf(1.0 - p) - shift.powf(1.0 - p)) / (1.0 - p)
    }
}

fn log_power_primitive(p: f64, y: f64) -> f64 {
    let l = (2.0 + y).ln();
    let l0 = 2.0f64.ln();
    if (p - 1.0).abs() < 1e-14 {
        (l / l0).ln()
    } else {
        (l.powf(1.0 - p) - l0.powf(1.0 - p)) / (1.0 - p)
    }
}

impl TestFunction {
    pub fn exp_decay(rate: f64) -> Self {
        TestFunction::ExpDecay {
            rate,
            left: LeftExtension::Flat,
        }
    }

    pub fn power_tail(p: f64) -> Self {
        TestFunction::PowerTail { p, shift: 1.0 }
    }

    pub fn log_power(p: f64) -> Self {
        TestFunction::LogPower { p }
    }

    pub fn indicator(a: f64, b: f64) -> Self {
        TestFunction::Indicator { a, b }
    }

    pub fn scaled(self, factor: f64) -> Self {
        TestFunction::Scaled {
            factor,
            inner: Box::new(self),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            TestFunction::ExpDecay { .. } => "exp_decay",
            TestFunction::PowerTail { .. } => "power_tail",
            TestFunction::LogPower { .. } => "log_power",
            TestFunction::Indicator { .. } => "indicator",
            TestFunction::Tabulated { .. } => "tabulated",
            TestFunction::Scaled { .. } => "scaled",
            TestFunction::Sum { .. } => "sum",
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFunction::ExpDecay { rate, left } => {
                if x >= 0.0 {
                    (-rate * x).exp()
                } else {
                    match left {
                        LeftExtension::Flat => 1.0,
                        LeftExtension::Zero => 0.0,
                    }
                }
            }
            TestFunction::PowerTail { p, shift } => (shift + x.abs()).powf(-p),
            TestFunction::LogPower { p } => {
                let y = 2.0 + x.abs();
                1.0 / (y * y.ln().powf(*p))
            }
            TestFunction::Indicator { a, b } => {
                if (*a..=*b).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            TestFunction::Tabulated { knots, values, tail } => {
                let n = knots.len();
                if x < knots[0] {
                    return 0.0;
                }
                if x >= knots[n - 1] {
                    let (xn, vn) = (knots[n - 1], values[n - 1]);
                    return match *tail {
                        TailModel::Zero => {
                            if x == xn {
                                vn
                            } else {
                                0.0
                            }
                        }
                        TailModel::Exponential { rate } => vn * (-rate * (x - xn)).exp(),
                        TailModel::Power { p } => vn * (1.0 + x - xn).powf(-p),
                    };
                }
                let i = knots.partition_point(|&k| k <= x) - 1;
                let w = (x - knots[i]) / (knots[i + 1] - knots[i]);
                values[i] + w * (values[i + 1] - values[i])
            }
            TestFunction::Scaled { factor, inner } => factor * inner.eval(x),
            TestFunction::Sum { terms } => terms.iter().map(|t| t.eval(x)).sum(),
        }
    }

    /// A continuous antiderivative `F` with `F(0) = 0`.
    pub fn antiderivative(&self, x: f64) -> f64 {
        match self {
            TestFunction::ExpDecay { rate, left } => {
                if x >= 0.0 {
                    -(-rate * x).exp_m1() / rate
                } else {
                    match left {
                        LeftExtension::Flat => x,
                        LeftExtension::Zero => 0.0,
                    }
                }
            }
            TestFunction::PowerTail { p, shift } => x.signum() * power_primitive(*p, *shift, x.abs()),
            TestFunction::LogPower { p } => x.signum() * log_power_primitive(*p, x.abs()),
            TestFunction::Indicator { a, b } => x.clamp(*a, *b) - 0.0f64.clamp(*a, *b),
            TestFunction::Tabulated { .. } => self.tabulated_primitive(x) - self.tabulated_primitive(0.0),
            TestFunction::Scaled { factor, inner } => factor * inner.antiderivative(x),
            TestFunction::Sum { terms } => terms.iter().map(|t| t.antiderivative(x)).sum(),
        }
    }

    fn tabulated_primitive(&self, x: f64) -> f64 {
        let TestFunction::Tabulated { knots, values, tail } = self else {
            unreachable!()
        };
        if x <= knots[0] {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in 0..knots.len() - 1 {
            let (x0, x1) = (knots[i], knots[i + 1]);
            let (v0, v1) = (values[i], values[i + 1]);
            if x <= x1 {
                let h = x - x0;
                let slope = (v1 - v0) / (x1 - x0);
                return acc + v0 * h + 0.5 * slope * h * h;
            }
            acc += 0.5 * (v0 + v1) * (x1 - x0);
        }
        let n = knots.len();
        let (xn, vn) = (knots[n - 1], values[n - 1]);
        let h = x - xn;
        acc + match *tail {
            TailModel::Zero => 0.0,
            TailModel::Exponential { rate } => -vn * (-rate * h).exp_m1() / rate,
            TailModel::Power { p } => vn * power_primitive(p, 1.0, h),
        }
    }

    /// `(F(+inf), F(-inf))`, `None` where the integral diverges.
    pub fn antiderivative_limits(&self) -> (Option<f64>, Option<f64>) {
        match self {
            TestFunction::ExpDecay { rate, left } => (
                Some(1.0 / rate),
                match left {
                    LeftExtension::Flat => None,
                    LeftExtension::Zero => Some(0.0),
                },
            ),
            TestFunction::PowerTail { p, shift } => {
                if *p > 1.0 {
                    let v = shift.powf(1.0 - p) / (p - 1.0);
                    (Some(v), Some(-v))
                } else {
                    (None, None)
                }
            }
            TestFunction::LogPower { p } => {
                if *p > 1.0 {
                    let v = 2.0f64.ln().powf(1.0 - p) / (p - 1.0);
                    (Some(v), Some(-v))
                } else {
                    (None, None)
                }
            }
            TestFunction::Indicator { .. } => {
                (Some(self.antiderivative(f64::MAX)), Some(self.antiderivative(f64::MIN)))
            }
            TestFunction::Tabulated { knots, values, tail } => {
                let n = knots.len();
                let finite_tail = match *tail {
                    TailModel::Zero | TailModel::Exponential { .. } => true,
                    TailModel::Power { p } => p > 1.0 || values[n - 1] == 0.0,
                };
                let lower = -self.tabulated_primitive(0.0);
                if !finite_tail {
                    return (None, Some(lower));
                }
                let tail_mass = match *tail {
                    TailModel::Zero => 0.0,
                    TailModel::Exponential { rate } => values[n - 1] / rate,
                    TailModel::Power { p } => {
                        if values[n - 1] == 0.0 {
                            0.0
                        } else {
                            values[n - 1] / (p - 1.0)
                        }
                    }
                };
                (
                    Some(self.tabulated_primitive(knots[n - 1]) + tail_mass + lower),
                    Some(lower),
                )
            }
            TestFunction::Scaled { factor, inner } => {
                if *factor == 0.0 {
                    return (Some(0.0), Some(0.0));
                }
                let (u, l) = inner.antiderivative_limits();
                (u.map(|v| factor * v), l.map(|v| factor * v))
            }
            TestFunction::Sum { terms } => {
                let mut up = Some(0.0);
                let mut lo = Some(0.0);
                for t in terms {
                    let (u, l) = t.antiderivative_limits();
                    up = up.zip(u).map(|(a, b)| a + b);
                    lo = lo.zip(l).map(|(a, b)| a + b);
                }
                (up, lo)
            }
        }
    }

    /// `int_R f`, or `None` if infinite.
    pub fn total_integral(&self) -> Option<f64> {
        match self.antiderivative_limits() {
            (Some(u), Some(l)) => Some(u - l),
            _ => None,
        }
    }

    /// Points where `f` or its derivative may be discontinuous.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = match self {
            TestFunction::ExpDecay { .. } | TestFunction::PowerTail { .. } | TestFunction::LogPower { .. } => vec![0.0],
            TestFunction::Indicator { a, b } => vec![*a, *b],
            TestFunction::Tabulated { knots, .. } => knots.clone(),
            TestFunction::Scaled { inner, .. } => inner.breakpoints(),
            TestFunction::Sum { terms } => terms.iter().flat_map(|t| t.breakpoints()).collect(),
        };
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Scale beyond which `f` follows its analytic tail model.
    pub fn tail_scale(&self) -> f64 {
        match self {
            TestFunction::ExpDecay { rate, .. } => 1.0 / rate,
            TestFunction::PowerTail { shift, .. } => *shift,
            TestFunction::LogPower { .. } => 2.0,
            TestFunction::Indicator { b, .. } => b.abs(),
            TestFunction::Tabulated { knots, tail, .. } => {
                let last = knots.last().copied().unwrap_or(0.0).abs();
                last + match *tail {
                    TailModel::Zero => 0.0,
                    TailModel::Exponential { rate } => 1.0 / rate,
                    TailModel::Power { .. } => 1.0,
                }
            }
            TestFunction::Scaled { inner, .. } => inner.tail_scale(),
            TestFunction::Sum { terms } => terms.iter().map(|t| t.tail_scale()).fold(0.0, f64::max),
        }
        .max(1.0)
    }

    pub fn validate(&self) -> Vec<ValidationIssue> {
        let mut issues = Vec::new();
        self.validate_into("f", &mut issues);
        issues
    }

    fn validate_into(&self, path: &str, issues: &mut Vec<ValidationIssue>) {
        let mut bad = |code: IssueCode, field: &str, msg: String| {
            issues.push(ValidationIssue::new(code, format!("{path}.params.{field}"), msg));
        };
        let positive = |v: f64| v.is_finite() && v > 0.0;
        match self {
            TestFunction::ExpDecay { rate, .. } => {
                if !positive(*rate) {
                    bad(
                        IssueCode::NonPositiveRate,
                        "rate",
                        format!("rate must be > 0, got {rate}"),
                    );
                }
            }
            TestFunction::PowerTail { p, shift } => {
                if !positive(*p) {
                    bad(IssueCode::NonFiniteParameter, "p", format!("p must be > 0, got {p}"));
                }
                if !(shift.is_finite() && *shift >= 1.0) {
                    bad(
                        IssueCode::NonFiniteParameter,
                        "shift",
                        format!("shift must be >= 1, got {shift}"),
                    );
                }
            }
            TestFunction::LogPower { p } => {
                if !positive(*p) {
                    bad(IssueCode::NonFiniteParameter, "p", format!("p must be > 0, got {p}"));
                }
            }
            TestFunction::Indicator { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    bad(
                        IssueCode::EmptyInterval,
                        "b",
                        format!("need finite a < b, got [{a}, {b}]"),
                    );
                }
            }
            TestFunction::Tabulated { knots, values, tail } => {
                if knots.len() < 2 || knots.len() != values.len() {
                    bad(
                        IssueCode::EmptyInterval,
                        "knots",
                        format!(
                            "need >= 2 knots with matching values, got {} knots and {} values",
                            knots.len(),
                            values.len()
                        ),
                    );
                    return;
                }
                if !knots.iter().all(|k| k.is_finite()) || !knots.windows(2).all(|w| w[0] < w[1]) {
                    bad(
                        IssueCode::EmptyInterval,
                        "knots",
                        "knots must be finite and strictly increasing".into(),
                    );
                }
                if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                    bad(
                        IssueCode::NonFiniteParameter,
                        "values",
                        format!("values must be finite and >= 0, found {v}"),
                    );
                }
                match *tail {
                    TailModel::Zero => {}
                    TailModel::Exponential { rate } if !positive(rate) => {
                        bad(
                            IssueCode::NonPositiveRate,
                            "tail.rate",
                            format!("tail rate must be > 0, got {rate}"),
                        );
                    }
                    TailModel::Power { p } if !positive(p) => {
                        bad(
                            IssueCode::NonFiniteParameter,
                            "tail.p",
                            format!("tail exponent must be > 0, got {p}"),
                        );
                    }
                    _ => {}
                }
            }
            TestFunction::Scaled { factor, inner } => {
                if !(factor.is_finite() && *factor >= 0.0) {
                    bad(
                        IssueCode::NonFiniteParameter,
                        "factor",
                        format!("factor must be finite and >= 0, got {factor}"),
                    );
                }
                inner.validate_into(&format!("{path}.params.inner"), issues);
            }
            TestFunction::Sum { terms } => {
                if terms.is_empty() {
                    bad(IssueCode::EmptyInterval, "terms", "sum needs at least one term".into());
                }
                for (i, t) in terms.iter().enumerate() {
                    t.validate_into(&format!("{path}.params.terms[{i}]"), issues);
                }
            }
        }
    }

    /// `int_{y0}^{y1} f(y) dy` along a linear piece traversed in `dt`, i.e.
    /// the exact time integral `int f(y(t)) dt` for linear `y`.
    pub fn segment_time_integral(&self, y0: f64, y1: f64, dt: f64) -> f64 {
        let dy = y1 - y0;
        if dy.abs() <= 1e-7 * (1.0 + y0.abs()) {
            return self.eval(0.5 * (y0 + y1)) * dt;
        }
        let v = (self.antiderivative(y1) - self.antiderivative(y0)) / dy * dt;
        v.max(0.0)
    }
}
