//! Potential density `u(x)` by Fourier inversion of `1 / Psi`.
//!
//! The inversion integral `u(x) = (1/pi) int_0^inf Re(e^{-irx} / Psi(r)) dr`
//! is singular at `r = 0` because `Psi(r) ~ -i mu r`. The model exponent
//! `Psi_0(r) = -i mu r + s^2 r^2 / 2` of a Brownian motion with the same mean
//! and effective variance is subtracted and inverted in closed form. For
//! bounded-variation jump parts without a Gaussian component the slowly
//! decaying drift term `1 / (k - i b0 r)` is removed the same way. What
//! remains is integrated over dyadic blocks until a tail bound is small.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::local_time::{local_time_criterion, LocalTimeOptions, LocalTimeOutcome};
use super::AnalysisError;
use crate::levy::{CharExponent, LevyMeasureSpec, LevyTriplet};
use crate::quadrature::{integrate, pairwise_sum, Tolerance};

/// Largest dyadic block exponent; the residual is integrated up to `2^23`.
const K_MAX: i32 = 22;
/// Relative size of the tail bound at which block refinement stops.
const TAIL_TARGET: f64 = 1e-4;
/// Relative error beyond which the inversion is reported unstable.
const UNSTABLE_REL: f64 = 0.05;
const ENVELOPE_SAMPLES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialDensity {
    pub grid: Vec<f64>,
    pub u_values: Vec<f64>,
    pub error_estimates: Vec<f64>,
    pub sup_bound: f64,
}

struct Inverter {
    psi: CharExponent,
    mu: f64,
    s2: f64,
    /// `(k, b0)` for the bounded-variation drift correction.
    drift_term: Option<(f64, f64)>,
}

impl Inverter {
    fn new(triplet: &LevyTriplet) -> Result<Self, AnalysisError> {
        let flags = triplet.classify();
        let lt = local_time_criterion(triplet, LocalTimeOptions::default())?;
        if lt.outcome != LocalTimeOutcome::HasLocalTimes {
            return Err(AnalysisError::PreconditionViolation(format!(
                "local time criterion returned {:?}",
                lt.outcome
            )));
        }
        let mu = match flags.mean {
            crate::levy::ExtendedReal::Finite(m) if m > 0.0 => m,
            other => {
                return Err(AnalysisError::PreconditionViolation(format!(
                    "mean must be finite and positive, got {other:?}"
                )))
            }
        };
        let m = &triplet.levy_measure;
        let drift_term = if triplet.gaussian == 0.0 && !matches!(m, LevyMeasureSpec::None {}) {
            triplet
                .effective_drift()
                .filter(|b0| *b0 != 0.0)
                .map(|b0| (m.total_mass().unwrap_or(1.0), b0))
        } else {
            None
        };
        Ok(Self {
            psi: CharExponent::new(triplet)?,
            mu,
            s2: triplet.effective_variance(),
            drift_term,
        })
    }

    fn residual(&self, r: f64) -> Complex64 {
        let psi = self.psi.eval(r);
        let psi0 = Complex64::new(0.5 * self.s2 * r * r, -self.mu * r);
        let mut res = if psi == psi0 {
            Complex64::new(0.0, 0.0)
        } else {
            psi.inv() - psi0.inv()
        };
        if let Some((k, b0)) = self.drift_term {
            res -= Complex64::new(k, -b0 * r).inv();
        }
        res
    }

    /// Closed-form inverse of the subtracted terms.
    fn explicit_part(&self, x: f64) -> f64 {
        let mu = self.mu;
        let base = if x >= 0.0 {
            1.0 / mu
        } else if self.s2 > 0.0 {
            (2.0 * mu * x / self.s2).exp() / mu
        } else {
            0.0
        };
        let extra = match self.drift_term {
            None => 0.0,
            Some((k, b0)) => {
                if x == 0.0 {
                    0.5 / b0.abs()
                } else if x * b0 > 0.0 {
                    (-k * x / b0).exp() / b0.abs()
                } else {
                    0.0
                }
            }
        };
        base + extra
    }

    fn explicit_sup(&self) -> f64 {
        1.0 / self.mu + self.drift_term.map_or(0.0, |(_, b0)| 1.0 / b0.abs())
    }

    fn is_exact(&self) -> bool {
        // Brownian motion with drift, or pure drift.
        self.residual(1.0) == Complex64::new(0.0, 0.0) && self.residual(3.7) == Complex64::new(0.0, 0.0)
    }

    fn envelope(&self, lo: f64, hi: f64) -> f64 {
        (0..=ENVELOPE_SAMPLES)
            .map(|j| {
                let r = lo + (hi - lo) * j as f64 / ENVELOPE_SAMPLES as f64;
                self.residual(r).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `int_0^inf h(r) dr` for `|h| <= |R|`, returning `(value, error)`.
    fn integrate_residual(&self, h: impl Fn(f64) -> f64, target: f64) -> Result<(f64, f64), AnalysisError> {
        let quad_tol = Tolerance::new(1e-3 * target, 1e-8).with_max_intervals(4000);
        let mut values = Vec::new();
        let mut errors = Vec::new();
        let mut prev_env = f64::NAN;
        let mut tail = f64::INFINITY;
        let mut k: i32 = -1;
        while k <= K_MAX {
            let (lo, hi) = if k < 0 {
                (0.0, 1.0)
            } else {
                (2f64.powi(k), 2f64.powi(k + 1))
            };
            let r = integrate(&h, lo, hi, quad_tol).map_err(|e| AnalysisError::QuadratureFailure(e.to_string()))?;
            values.push(r.value);
            errors.push(r.error);
            if k >= 0 {
                let env = self.envelope(lo, hi);
                if env == 0.0 {
                    tail = 0.0;
                } else if prev_env.is_finite() && prev_env > 0.0 {
                    // Envelope decaying like r^{-p} from lo onwards.
                    let p = (prev_env / env).log2();
                    if p > 1.05 {
                        tail = env * lo.powf(p) * hi.powf(1.0 - p) / (p - 1.0);
                    }
                }
                prev_env = env;
                if k >= 3 && tail <= TAIL_TARGET * target {
                    break;
                }
            }
            k += 1;
        }
        Ok((pairwise_sum(&values), pairwise_sum(&errors) + tail))
    }

    fn density(&self, x: f64) -> Result<(f64, f64), AnalysisError> {
        let explicit = self.explicit_part(x);
        if self.is_exact() {
            return Ok((explicit, 0.0));
        }
        let target = explicit.abs().max(0.01 / self.mu);
        let (v, e) = self.integrate_residual(
            |r| {
                let res = self.residual(r);
                let (sn, cs) = (r * x).sin_cos();
                res.re * cs + res.im * sn
            },
            target,
        )?;
        let u = explicit + v / std::f64::consts::PI;
        let err = e / std::f64::consts::PI;
        if err > UNSTABLE_REL * u.abs().max(0.01 / self.mu) {
            return Err(AnalysisError::InversionUnstable {
                x,
                value: u,
                error: err,
            });
        }
        Ok((u.max(0.0), err))
    }

    /// `sup_x u(x) <= sup of explicit part + (1/pi) int |R|`.
    fn uniform_bound(&self) -> Result<f64, AnalysisError> {
        if self.is_exact() {
            return Ok(self.explicit_sup());
        }
        let (v, e) = self.integrate_residual(|r| self.residual(r).norm(), 1.0 / self.mu)?;
        Ok(self.explicit_sup() + (v + e) / std::f64::consts::PI)
    }
}

pub fn potential_density(triplet: &LevyTriplet, grid: &[f64]) -> Result<PotentialDensity, AnalysisError> {
    if grid.is_empty() || !grid.iter().all(|x| x.is_finite()) || !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(AnalysisError::InvalidArgument(
            "grid must be finite and strictly increasing".into(),
        ));
    }
    let inv = Inverter::new(triplet)?;
    let mut u_values = Vec::with_capacity(grid.len());
    let mut error_estimates = Vec::with_capacity(grid.len());
    for &x in grid {
        let (u, e) = inv.density(x)?;
        u_values.push(u);
        error_estimates.push(e);
    }
    let sup_bound = u_values
        .iter()
        .zip(&error_estimates)
        .map(|(u, e)| u + e)
        .fold(0.0, f64::max);
    Ok(PotentialDensity {
        grid: grid.to_vec(),
        u_values,
        error_estimates,
        sup_bound,
    })
}

/// Upper bound on `sup_x u(x)` over the whole line.
pub fn potential_sup_bound(triplet: &LevyTriplet) -> Result<f64, AnalysisError> {
    Inverter::new(triplet)?.uniform_bound()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{JumpLaw, JumpSign};

    #[test]
    fn pure_drift_is_exact() {
        let t = LevyTriplet::pure_drift(2.0);
        let p = potential_density(&t, &[-1.0, 0.0, 0.5, 10.0]).unwrap();
        assert_eq!(p.u_values, vec![0.0, 0.5, 0.5, 0.5]);
        assert_eq!(potential_sup_bound(&t).unwrap(), 0.5);
    }

    #[test]
    fn brownian_drift_closed_form() {
        let t = LevyTriplet::brownian(1.0, 1.0);
        let p = potential_density(&t, &[-2.0, 0.0, 1.0, 3.0]).unwrap();
        let expected = [(-4.0f64).exp(), 1.0, 1.0, 1.0];
        for (u, e) in p.u_values.iter().zip(expected) {
            assert!((u - e).abs() < 1e-14);
        }
    }

    #[test]
    fn subordinator_renewal_density() {
        // drift d + CP(lambda, Exp(theta)): u(x) = theta/D + (lambda/(d D)) e^{-D x/d}, D = d theta + lambda.
        let (d, lambda, theta) = (0.1, 1.0, 2.0);
        let law = JumpLaw::Exponential {
            theta,
            sign: JumpSign::Positive,
        };
        let comp = lambda * law.truncated_mean(1.0);
        let t = LevyTriplet::new(
            d + comp,
            0.0,
            LevyMeasureSpec::CompoundPoisson {
                rate: lambda,
                jump_law: law,
            },
        );
        let big_d = d * theta + lambda;
        let exact = |x: f64| {
            if x < 0.0 {
                0.0
            } else {
                theta / big_d + lambda / (d * big_d) * (-big_d * x / d).exp()
            }
        };
        let grid = [-1.0, 0.05, 0.3, 2.0];
        let p = potential_density(&t, &grid).unwrap();
        for (&x, &u) in grid.iter().zip(&p.u_values) {
            assert!((u - exact(x)).abs() < 1e-3, "x={x}: {u} vs {}", exact(x));
        }
        let sup = potential_sup_bound(&t).unwrap();
        assert!(sup >= 1.0 / d - 1e-6, "{sup}");
    }

    #[test]
    fn brownian_with_two_sided_jumps() {
        // Spectrally negative: positivity and the large-x limit 1/mu.
        let law = JumpLaw::Exponential {
            theta: 1.0,
            sign: JumpSign::Negative,
        };
        let t = LevyTriplet::new(
            2.0,
            1.0,
            LevyMeasureSpec::CompoundPoisson {
                rate: 1.0,
                jump_law: law,
            },
        );
        let mu = t.mean().finite().unwrap();
        let p = potential_density(&t, &[-3.0, 0.0, 20.0]).unwrap();
        assert!(p.u_values.iter().all(|u| *u > 0.0));
        assert!((p.u_values[2] - 1.0 / mu).abs() < 1e-3);
        assert!(p.sup_bound >= p.u_values[1]);
    }

    #[test]
    fn stable_plus_drift() {
        let t = LevyTriplet::new(
            1.0,
            0.0,
            LevyMeasureSpec::StableLike {
                alpha: 1.5,
                scale: 1.0,
                skew: 0.0,
            },
        );
        let p = potential_density(&t, &[-1.0, 0.0, 1.0, 30.0]).unwrap();
        assert!(p.u_values.iter().all(|u| *u >= 0.0));
        // Reference values from the time-truncated inversion
        // (1/pi) int Re(e^{-irx}(1 - e^{-T Psi}) / Psi) dr extrapolated in T^{-1/2}.
        for (u, reference) in p.u_values.iter().zip([0.897, 1.497, 1.280, 1.098]) {
            assert!((u - reference).abs() < 0.01, "{:?}", p.u_values);
        }
        let sup = potential_sup_bound(&t).unwrap();
        assert!(sup >= p.u_values.iter().cloned().fold(0.0, f64::max));
    }

    #[test]
    fn preconditions() {
        let stable = LevyTriplet::new(
            1.0,
            0.0,
            LevyMeasureSpec::StableLike {
                alpha: 0.5,
                scale: 1.0,
                skew: 0.0,
            },
        );
        assert!(matches!(
            potential_density(&stable, &[0.0]),
            Err(AnalysisError::PreconditionViolation(_))
        ));
        let negative = LevyTriplet::brownian(-1.0, 1.0);
        assert!(matches!(
            potential_density(&negative, &[0.0]),
            Err(AnalysisError::PreconditionViolation(_))
        ));
    }
}
