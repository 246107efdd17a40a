//! Parametric Lévy measure families.
//!
//! All compensators use the open truncation `|x| < 1`:
//! `Psi_nu(l) = int (1 - e^{ilx} + i l x 1{|x|<1}) nu(dx)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_li};

use super::jump_law::JumpLaw;
use super::{ExtendedReal, IssueCode, ValidationIssue};
use crate::quadrature::{integrate, Tolerance};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum LevyMeasureSpec {
    None {},
    CompoundPoisson {
        rate: f64,
        jump_law: JumpLaw,
    },
    /// Density `scale * (1 + skew)/2 * x^{-1-alpha}` on `x > 0` and
    /// `scale * (1 - skew)/2 * |x|^{-1-alpha}` on `x < 0`.
    StableLike {
        alpha: f64,
        scale: f64,
        skew: f64,
    },
    /// Stable-like density multiplied by `exp(-tempering * |x|)`.
    TemperedStable {
        alpha: f64,
        scale: f64,
        tempering: f64,
        skew: f64,
    },
    /// Density `scale * |x|^{-1-alpha}` on `x < 0` only.
    SpectrallyNegativeStable {
        alpha: f64,
        scale: f64,
    },
}

/// Power-law (optionally tempered) density with one-sided weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub alpha: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    pub tempering: Option<f64>,
}

fn quad(f: impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
    integrate(f, a, b, Tolerance::new(1e-15, 1e-12).with_max_intervals(500))
        .map(|r| r.value)
        .unwrap_or(f64::NAN)
}

impl PowerLaw {
    fn weight(&self) -> f64 {
        self.c_plus + self.c_minus
    }

    fn asymmetry(&self) -> f64 {
        self.c_plus - self.c_minus
    }

    /// `int_lo^hi x^{-power} e^{-k x} dx` for `0 < lo < hi <= inf`.
    fn radial(&self, power: f64, lo: f64, hi: f64) -> f64 {
        match self.tempering {
            None => {
                if hi.is_infinite() {
                    if power > 1.0 {
                        lo.powf(1.0 - power) / (power - 1.0)
                    } else {
                        f64::INFINITY
                    }
                } else if (power - 1.0).abs() < 1e-14 {
                    (hi / lo).ln()
                } else {
                    (hi.powf(1.0 - power) - lo.powf(1.0 - power)) / (1.0 - power)
                }
            }
            Some(k) => {
                let upper = if hi.is_infinite() { lo + 60.0 / k } else { hi };
                let f = |x: f64| x.powf(-power) * (-k * x).exp();
                // Split so the exponential decay scale is resolved.
                let mut pieces = vec![lo];
                let mut x = lo;
                while x < upper {
                    x = (x * 2.0).max(x + 1.0 / k).min(upper);
                    pieces.push(x);
                }
                pieces.windows(2).map(|w| quad(f, w[0], w[1])).sum()
            }
        }
    }

    /// `int_0^h x^{1-alpha} e^{-kx} dx`, finite for every alpha < 2.
    fn near_zero_second(&self, h: f64) -> f64 {
        let a = 2.0 - self.alpha;
        match self.tempering {
            None => h.powf(a) / a,
            Some(k) => k.powf(-a) * gamma_li(a, k * h),
        }
    }

    /// `int_0^h x^{-alpha} e^{-kx} dx`; finite only for alpha < 1.
    fn near_zero_first(&self, h: f64) -> f64 {
        if self.alpha >= 1.0 {
            return f64::INFINITY;
        }
        let a = 1.0 - self.alpha;
        match self.tempering {
            None => h.powf(a) / a,
            Some(k) => k.powf(-a) * gamma_li(a, k * h),
        }
    }

    /// `int_0^inf (1 - e^{ilx} + ilx 1{x<1}) x^{-1-alpha} e^{-kx} dx`.
    fn positive_half(&self, lambda: f64, consts: &PowerConsts) -> Complex64 {
        if lambda == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let i = Complex64::new(0.0, 1.0);
        let a = self.alpha;
        match self.tempering {
            None => {
                if (a - 1.0).abs() < 1e-12 {
                    let l = lambda.abs();
                    Complex64::new(0.5 * PI * l, -lambda * (1.0 - EULER_GAMMA - l.ln()))
                } else {
                    let base = Complex64::new(0.0, -lambda).powf(a);
                    -consts.gamma_neg_alpha * base + i * lambda / (1.0 - a)
                }
            }
            Some(k) => {
                // int (e^{ilx} - 1 - ilx) x^{-1-a} e^{-kx} dx in closed form.
                let z = Complex64::new(k, -lambda);
                let j = if (a - 1.0).abs() < 1e-12 {
                    z * (z / k).ln() + i * lambda
                } else {
                    consts.gamma_neg_alpha * (z.powf(a) - k.powf(a) + i * (a * lambda * k.powf(a - 1.0)))
                };
                -j - i * lambda * consts.tail_first
            }
        }
    }

    fn consts(&self) -> PowerConsts {
        let a = self.alpha;
        let gamma_neg_alpha = if (a - 1.0).abs() < 1e-12 {
            f64::NAN
        } else {
            gamma(2.0 - a) / (a * (a - 1.0))
        };
        let tail_first = match self.tempering {
            Some(_) => self.radial(a, 1.0, f64::INFINITY),
            None => f64::NAN,
        };
        PowerConsts {
            gamma_neg_alpha,
            tail_first,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct PowerConsts {
    gamma_neg_alpha: f64,
    tail_first: f64,
}

/// Measure with any expensive constants evaluated once, for repeated
/// evaluation of the exponent.
#[derive(Debug, Clone)]
pub struct PreparedMeasure {
    spec: LevyMeasureSpec,
    power: Option<(PowerLaw, PowerConsts)>,
    cp_compensator: f64,
}

impl PreparedMeasure {
    pub fn new(spec: &LevyMeasureSpec) -> Self {
        let power = spec.power_law().map(|p| (p, p.consts()));
        let cp_compensator = match spec {
            LevyMeasureSpec::CompoundPoisson { rate, jump_law } => rate * jump_law.truncated_mean(1.0),
            _ => 0.0,
        };
        Self {
            spec: spec.clone(),
            power,
            cp_compensator,
        }
    }

    pub fn exponent(&self, lambda: f64) -> Complex64 {
        match &self.spec {
            LevyMeasureSpec::None {} => Complex64::new(0.0, 0.0),
            LevyMeasureSpec::CompoundPoisson { rate, jump_law } => {
                *rate * (Complex64::new(1.0, 0.0) - jump_law.char_fn(lambda))
                    + Complex64::new(0.0, lambda * self.cp_compensator)
            }
            _ => {
                let (p, c) = self.power.as_ref().expect("power-law family");
                p.c_plus * p.positive_half(lambda, c) + p.c_minus * p.positive_half(-lambda, c)
            }
        }
    }
}

impl LevyMeasureSpec {
    pub fn power_law(&self) -> Option<PowerLaw> {
        match *self {
            LevyMeasureSpec::StableLike { alpha, scale, skew } => Some(PowerLaw {
                alpha,
                c_plus: 0.5 * scale * (1.0 + skew),
                c_minus: 0.5 * scale * (1.0 - skew),
                tempering: None,
            }),
            LevyMeasureSpec::TemperedStable {
                alpha,
                scale,
                tempering,
                skew,
            } => Some(PowerLaw {
                alpha,
                c_plus: 0.5 * scale * (1.0 + skew),
                c_minus: 0.5 * scale * (1.0 - skew),
                tempering: Some(tempering),
            }),
            LevyMeasureSpec::SpectrallyNegativeStable { alpha, scale } => Some(PowerLaw {
                alpha,
                c_plus: 0.0,
                c_minus: scale,
                tempering: None,
            }),
            _ => None,
        }
    }

    /// `Psi_nu(lambda)`; prefer [`PreparedMeasure`] in loops.
    pub fn exponent(&self, lambda: f64) -> Complex64 {
        PreparedMeasure::new(self).exponent(lambda)
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            LevyMeasureSpec::None {} => "none",
            LevyMeasureSpec::CompoundPoisson { .. } => "compound_poisson",
            LevyMeasureSpec::StableLike { .. } => "stable_like",
            LevyMeasureSpec::TemperedStable { .. } => "tempered_stable",
            LevyMeasureSpec::SpectrallyNegativeStable { .. } => "spectrally_negative_stable",
        }
    }

    /// `nu(|x| >= 1)`.
    pub fn tail_mass(&self) -> f64 {
        match self {
            LevyMeasureSpec::None {} => 0.0,
            LevyMeasureSpec::CompoundPoisson { rate, jump_law } => rate * jump_law.tail_probability(1.0),
            _ => {
                let p = self.power_law().expect("power-law family");
                p.weight() * p.radial(1.0 + p.alpha, 1.0, f64::INFINITY)
            }
        }
    }

    /// `int_{|x| >= 1} x nu(dx)`, which may diverge.
    pub fn tail_first_moment(&self) -> ExtendedReal {
        match self {
            LevyMeasureSpec::None {} => ExtendedReal::Finite(0.0),
            LevyMeasureSpec::CompoundPoisson { rate, jump_law } => {
                ExtendedReal::Finite(rate * (jump_law.mean() - jump_law.truncated_mean(1.0)))
            }
            _ => {
                let p = self.power_law().expect("power-law family");
                if p.tempering.is_some() || p.alpha > 1.0 {
                    ExtendedReal::Finite(p.asymmetry() * p.radial(p.alpha, 1.0, f64::INFINITY))
                } else {
                    match (p.c_plus > 0.0, p.c_minus > 0.0) {
                        (true, true) => ExtendedReal::Undefined,
                        (true, false) => ExtendedReal::PosInfinity,
                        (false, true) => ExtendedReal::NegInfinity,
                        (false, false) => ExtendedReal::Finite(0.0),
                    }
                }
            }
        }
    }

    /// `int_{|x| < eps} x^2 nu(dx)`.
    pub fn small_jump_variance(&self, eps: f64) -> f64 {
        if eps <= 0.0 {
            return 0.0;
        }
        match self {
            LevyMeasureSpec::None {} => 0.0,
            LevyMeasureSpec::CompoundPoisson { rate, jump_law } => rate * jump_law.truncated_second_moment(eps),
            _ => {
                let p = self.power_law().expect("power-law family");
                p.weight() * p.near_zero_second(eps)
            }
        }
    }

    /// `int x^2 nu(dx)` when finite.
    pub fn second_moment(&self) -> Option<f64> {
        match self {
            LevyMeasureSpec::None {} => Some(0.0),
            LevyMeasureSpec::CompoundPoisson { rate, jump_law } => Some(rate * jump_law.second_moment()),
            _ => {
                let p = self.power_law().expect("power-law family");
                p.tempering
                    .map(|k| p.weight() * gamma(2.0 - p.alpha) * k.powf(p.alpha - 2.0))
            }
        }
    }

    /// `int_{lo <= |x| < hi} x nu(dx)` for `0 < lo <= hi < inf`.
    pub fn first_moment_between(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        match self {
            LevyMeasureSpec::None {} => 0.0,
            LevyMeasureSpec::CompoundPoisson { rate, jump_law } => {
                rate * (jump_law.truncated_mean(hi) - jump_law.truncated_mean(lo))
            }
            _ => {
                let p = self.power_law().expect("power-law family");
                p.asymmetry() * p.radial(p.alpha, lo, hi)
            }
        }
    }

    /// `int_{|x| < 1} x nu(dx)` for bounded-variation measures.
    pub fn bv_compensator(&self) -> Option<f64> {
        match self {
            LevyMeasureSpec::None {} => Some(0.0),
            LevyMeasureSpec::CompoundPoisson { rate, jump_law } => Some(rate * jump_law.truncated_mean(1.0)),
            _ => {
                let p = self.power_law().expect("power-law family");
                if p.alpha < 1.0 {
                    Some(p.asymmetry() * p.near_zero_first(1.0))
                } else {
                    None
                }
            }
        }
    }

    pub fn total_mass(&self) -> Option<f64> {
        match self {
            LevyMeasureSpec::None {} => Some(0.0),
            LevyMeasureSpec::CompoundPoisson { rate, .. } => Some(*rate),
            _ => None,
        }
    }

    pub fn is_finite_activity(&self) -> bool {
        self.total_mass().is_some()
    }

    pub fn is_bounded_variation(&self) -> bool {
        self.bv_compensator().is_some()
    }

    pub fn has_positive_jumps(&self) -> bool {
        match self {
            LevyMeasureSpec::None {} => false,
            LevyMeasureSpec::CompoundPoisson { jump_law, .. } => jump_law.has_positive_mass(),
            _ => self.power_law().is_some_and(|p| p.c_plus > 0.0),
        }
    }

    pub fn has_negative_jumps(&self) -> bool {
        match self {
            LevyMeasureSpec::None {} => false,
            LevyMeasureSpec::CompoundPoisson { jump_law, .. } => jump_law.has_negative_mass(),
            _ => self.power_law().is_some_and(|p| p.c_minus > 0.0),
        }
    }

    pub(crate) fn validate(&self, issues: &mut Vec<ValidationIssue>) {
        let mut push = |code: IssueCode, field: &str, msg: String| {
            issues.push(ValidationIssue::new(code, format!("levy_measure.params.{field}"), msg));
        };
        let alpha_ok = |alpha: f64, lo: f64, hi: f64| alpha.is_finite() && alpha > lo && alpha < hi;
        match self {
            LevyMeasureSpec::None {} => {}
            LevyMeasureSpec::CompoundPoisson { rate, jump_law } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    push(
                        IssueCode::NonPositiveRate,
                        "rate",
                        format!("rate must be > 0, got {rate}"),
                    );
                }
                jump_law.validate("levy_measure.params.jump_law", issues);
            }
            LevyMeasureSpec::StableLike { alpha, scale, skew } => {
                if !alpha_ok(*alpha, 0.0, 2.0) {
                    push(
                        IssueCode::AlphaRange,
                        "alpha",
                        format!("alpha must lie in (0, 2), got {alpha}"),
                    );
                }
                if !(scale.is_finite() && *scale > 0.0) {
                    push(
                        IssueCode::NonPositiveScale,
                        "scale",
                        format!("scale must be > 0, got {scale}"),
                    );
                }
                if !(skew.is_finite() && (-1.0..=1.0).contains(skew)) {
                    push(
                        IssueCode::SkewRange,
                        "skew",
                        format!("skew must lie in [-1, 1], got {skew}"),
                    );
                }
            }
            LevyMeasureSpec::TemperedStable {
                alpha,
                scale,
                tempering,
                skew,
            } => {
                if !alpha_ok(*alpha, 0.0, 2.0) {
                    push(
                        IssueCode::AlphaRange,
                        "alpha",
                        format!("alpha must lie in (0, 2), got {alpha}"),
                    );
                }
                if !(scale.is_finite() && *scale > 0.0) {
                    push(
                        IssueCode::NonPositiveScale,
                        "scale",
                        format!("scale must be > 0, got {scale}"),
                    );
                }
                if !(tempering.is_finite() && *tempering > 0.0) {
                    push(
                        IssueCode::NonPositiveTempering,
                        "tempering",
                        format!("tempering must be > 0, got {tempering}"),
                    );
                }
                if !(skew.is_finite() && (-1.0..=1.0).contains(skew)) {
                    push(
                        IssueCode::SkewRange,
                        "skew",
                        format!("skew must lie in [-1, 1], got {skew}"),
                    );
                }
            }
            LevyMeasureSpec::SpectrallyNegativeStable { alpha, scale } => {
                if !alpha_ok(*alpha, 1.0, 2.0) {
                    push(
                        IssueCode::AlphaRange,
                        "alpha",
                        format!("alpha must lie in (1, 2), got {alpha}"),
                    );
                }
                if !(scale.is_finite() && *scale > 0.0) {
                    push(
                        IssueCode::NonPositiveScale,
                        "scale",
                        format!("scale must be > 0, got {scale}"),
                    );
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::jump_law::JumpSign;
    use crate::quadrature::integrate_pieces;

    /// Direct quadrature of the Lévy-Khintchine integral over a power-law
    /// density, independent of the closed forms above.
    fn lk_oracle(p: &PowerLaw, lambda: f64) -> Complex64 {
        let k = p.tempering.unwrap_or(0.0);
        let integrand = |x: f64, part: usize| {
            let lx = lambda * x;
            let re = 2.0 * (0.5 * lx).sin().powi(2);
            let im = -lx.sin() + if x < 1.0 { lx } else { 0.0 };
            let d = x.powf(-1.0 - p.alpha) * (-k * x).exp();
            if part == 0 {
                re * d
            } else {
                im * d
            }
        };
        let mut pts = vec![0.0, 1e-6];
        let mut x: f64 = 1e-6;
        while x < 1e4 {
            x *= 1.25;
            pts.push(x);
        }
        let tol = Tolerance::new(1e-13, 1e-11).with_max_intervals(4000);
        let re = integrate_pieces(|x| integrand(x, 0), &pts, tol).unwrap().value;
        let im = integrate_pieces(|x| integrand(x, 1), &pts, tol).unwrap().value;
        // Beyond the last point the cosine and sine terms are O(x^{-1-a}/lambda);
        // only the non-oscillating part of the real integrand is kept.
        let tail = if k == 0.0 { x.powf(-p.alpha) / p.alpha } else { 0.0 };
        Complex64::new(re + tail, im)
    }

    fn check_half(alpha: f64, tempering: Option<f64>, lambda: f64, tol: f64) {
        let p = PowerLaw {
            alpha,
            c_plus: 1.0,
            c_minus: 0.0,
            tempering,
        };
        let closed = p.positive_half(lambda, &p.consts());
        let oracle = lk_oracle(&p, lambda);
        assert!(
            (closed - oracle).norm() < tol * (1.0 + oracle.norm()),
            "alpha={alpha} k={tempering:?} lambda={lambda}: closed {closed} oracle {oracle}"
        );
    }

    #[test]
    fn stable_half_matches_quadrature() {
        for &alpha in &[0.5, 0.8, 1.0, 1.2, 1.5, 1.8] {
            for &lambda in &[0.7, 2.0, -1.3] {
                check_half(alpha, None, lambda, 2e-4);
            }
        }
    }

    #[test]
    fn tempered_half_matches_quadrature() {
        for &alpha in &[0.4, 1.0, 1.5] {
            for &lambda in &[0.5, 3.0, -2.0] {
                check_half(alpha, Some(1.5), lambda, 1e-6);
            }
        }
    }

    #[test]
    fn compound_poisson_exponent_is_direct_expectation() {
        // Poisson(1) count of unit jumps: E e^{il xi_1} = exp(e^{il} - 1).
        let m = LevyMeasureSpec::CompoundPoisson {
            rate: 1.0,
            jump_law: JumpLaw::Constant { value: 1.0 },
        };
        for &l in &[0.3, 1.0, 2.5] {
            let psi = m.exponent(l);
            let expected = Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, l);
            assert!((psi - expected).norm() < 1e-14);
        }
    }

    #[test]
    fn stable_moments() {
        let m = LevyMeasureSpec::StableLike {
            alpha: 1.5,
            scale: 2.0,
            skew: 0.5,
        };
        // c+ = 1.5, c- = 0.5; int_{|x|>=1} x nu = (c+ - c-)/(alpha - 1).
        assert_eq!(m.tail_first_moment(), ExtendedReal::Finite(2.0));
        assert!((m.tail_mass() - 2.0 / 1.5).abs() < 1e-14);
        assert!((m.small_jump_variance(0.25) - 2.0 * 0.25f64.powf(0.5) / 0.5).abs() < 1e-14);
        assert!(m.second_moment().is_none());
        assert!(!m.is_bounded_variation());
    }

    #[test]
    fn heavy_tails_have_extended_means() {
        let sym = LevyMeasureSpec::StableLike {
            alpha: 0.5,
            scale: 1.0,
            skew: 0.0,
        };
        assert_eq!(sym.tail_first_moment(), ExtendedReal::Undefined);
        let pos = LevyMeasureSpec::StableLike {
            alpha: 0.9,
            scale: 1.0,
            skew: 1.0,
        };
        assert_eq!(pos.tail_first_moment(), ExtendedReal::PosInfinity);
        let neg = LevyMeasureSpec::StableLike {
            alpha: 1.0,
            scale: 1.0,
            skew: -1.0,
        };
        assert_eq!(neg.tail_first_moment(), ExtendedReal::NegInfinity);
    }

    #[test]
    fn tempered_moments_match_quadrature() {
        let m = LevyMeasureSpec::TemperedStable {
            alpha: 0.7,
            scale: 1.0,
            tempering: 2.0,
            skew: 0.2,
        };
        let p = m.power_law().unwrap();
        let dens = |x: f64| x.powf(-1.7) * (-2.0 * x).exp();
        let tol = Tolerance::new(1e-14, 1e-12).with_max_intervals(5000);
        let m2 = integrate(|x| x * x * dens(x), 0.0, 0.3, tol).unwrap().value;
        assert!((m.small_jump_variance(0.3) - p.weight() * m2).abs() < 1e-10);
        let comp = integrate(|x| x * dens(x), 0.0, 1.0, tol).unwrap().value;
        assert!((m.bv_compensator().unwrap() - p.asymmetry() * comp).abs() < 1e-7);
    }

    #[test]
    fn jump_direction_flags() {
        let up = LevyMeasureSpec::CompoundPoisson {
            rate: 1.0,
            jump_law: JumpLaw::Exponential {
                theta: 1.0,
                sign: JumpSign::Positive,
            },
        };
        assert!(up.has_positive_jumps() && !up.has_negative_jumps());
        let sn = LevyMeasureSpec::SpectrallyNegativeStable { alpha: 1.5, scale: 1.0 };
        assert!(!sn.has_positive_jumps() && sn.has_negative_jumps());
    }
}
