//! Euler scheme with exact-time large jumps.
//!
//! Per step of length `h` the continuous part moves by
//! `drift * h + sqrt(sigma^2 + v(eps)) * sqrt(h) * Z`, where `v(eps)` is the
//! variance of the discarded jumps `|x| < eps`. Jumps with `|x| >= eps` arrive
//! on a Poisson clock at their exact times. Between grid points and jumps the
//! path is linear, so a trajectory is a sequence of [`Segment`]s.

use std::ops::ControlFlow;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use super::McError;
use crate::levy::{JumpLaw, LevyMeasureSpec, LevyTriplet};

/// Expected number of power-law jumps per step used to pick the cutoff.
const JUMPS_PER_STEP: f64 = 0.25;
/// Largest expected number of compound Poisson jumps per step.
const MAX_CP_JUMPS_PER_STEP: f64 = 0.5;
/// Target ratio of discarded-jump variance to the effective variance.
const DISCARDED_VARIANCE_RATIO: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub dt: f64,
    /// Overrides the automatic small-jump cutoff.
    #[serde(default)]
    pub cutoff: Option<f64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { dt: 0.01, cutoff: None }
    }
}

impl SimOptions {
    pub fn with_dt(dt: f64) -> Self {
        Self { dt, cutoff: None }
    }
}

/// Linear piece of a path on `[t0, t1]`. Consecutive segments with
/// `y1 != y0` of the next one are separated by a jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    pub y0: f64,
    pub y1: f64,
    /// `t1` is a grid time and `y1` the grid value.
    pub grid_end: bool,
}

impl Segment {
    pub fn value_at(&self, t: f64) -> f64 {
        if self.t1 == self.t0 {
            return self.y1;
        }
        self.y0 + (self.y1 - self.y0) * (t - self.t0) / (self.t1 - self.t0)
    }

    /// First time in the segment with value `>= z`, if any.
    pub fn crossing_time(&self, z: f64) -> Option<f64> {
        if self.y0 >= z {
            Some(self.t0)
        } else if self.y1 >= z {
            Some(self.t0 + (self.t1 - self.t0) * (z - self.y0) / (self.y1 - self.y0))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone)]
enum BigJumps {
    None,
    Compound {
        rate: f64,
        law: JumpLaw,
    },
    /// Proposals from the untempered Pareto tail, thinned by `e^{-k|x|}`.
    Power {
        eps: f64,
        alpha: f64,
        p_plus: f64,
        tempering: Option<f64>,
        rate: f64,
    },
}

/// Scheme parameters, reported alongside results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeInfo {
    pub dt: f64,
    pub cutoff: f64,
    pub drift: f64,
    pub diffusion: f64,
    pub jump_rate: f64,
    pub discarded_variance: f64,
}

#[derive(Debug, Clone)]
pub struct Simulator {
    info: SchemeInfo,
    jumps: BigJumps,
}

impl Simulator {
    pub fn new(triplet: &LevyTriplet, options: SimOptions) -> Result<Self, McError> {
        triplet.ensure_valid()?;
        let dt = options.dt;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(McError::InvalidArgument(format!("dt must be > 0, got {dt}")));
        }
        if let Some(c) = options.cutoff {
            if !(c > 0.0 && c.is_finite()) {
                return Err(McError::InvalidArgument(format!("cutoff must be > 0, got {c}")));
            }
        }
        let m = &triplet.levy_measure;
        let (jumps, cutoff, drift, discarded) = match m {
            LevyMeasureSpec::None {} => (BigJumps::None, 0.0, triplet.drift, 0.0),
            LevyMeasureSpec::CompoundPoisson { rate, jump_law } => {
                if rate * dt > MAX_CP_JUMPS_PER_STEP {
                    return Err(McError::StepTooCoarse {
                        expected_jumps: rate * dt,
                        limit: MAX_CP_JUMPS_PER_STEP,
                    });
                }
                let comp = m.bv_compensator().unwrap_or(0.0);
                let law = BigJumps::Compound {
                    rate: *rate,
                    law: jump_law.clone(),
                };
                (law, 0.0, triplet.drift - comp, 0.0)
            }
            _ => {
                let p = m.power_law().expect("power-law family");
                let a = p.alpha;
                let w = p.c_plus + p.c_minus;
                let eps = options.cutoff.unwrap_or_else(|| {
                    let by_rate = (w * dt / (JUMPS_PER_STEP * a)).powf(1.0 / a);
                    let target = DISCARDED_VARIANCE_RATIO * triplet.effective_variance();
                    let by_variance = (target * (2.0 - a) / w).powf(1.0 / (2.0 - a));
                    by_rate.max(by_variance)
                });
                let drift = if eps < 1.0 {
                    triplet.drift - m.first_moment_between(eps, 1.0)
                } else {
                    triplet.drift + m.first_moment_between(1.0, eps)
                };
                let law = BigJumps::Power {
                    eps,
                    alpha: a,
                    p_plus: p.c_plus / w,
                    tempering: p.tempering,
                    rate: w * eps.powf(-a) / a,
                };
                (law, eps, drift, m.small_jump_variance(eps))
            }
        };
        let jump_rate = match &jumps {
            BigJumps::None => 0.0,
            BigJumps::Compound { rate, .. } | BigJumps::Power { rate, .. } => *rate,
        };
        Ok(Self {
            info: SchemeInfo {
                dt,
                cutoff,
                drift,
                diffusion: (triplet.gaussian + discarded).sqrt(),
                jump_rate,
                discarded_variance: discarded,
            },
            jumps,
        })
    }

    pub fn info(&self) -> SchemeInfo {
        self.info
    }

    pub fn dt(&self) -> f64 {
        self.info.dt
    }

    pub fn diffusion(&self) -> f64 {
        self.info.diffusion
    }

    /// Draws the size of a proposed jump; `None` when thinned away.
    fn jump_size<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<f64> {
        match &self.jumps {
            BigJumps::None => None,
            BigJumps::Compound { law, .. } => Some(law.sample(rng)),
            BigJumps::Power {
                eps,
                alpha,
                p_plus,
                tempering,
                ..
            } => {
                let sign = if rng.random::<f64>() < *p_plus { 1.0 } else { -1.0 };
                let u: f64 = 1.0 - rng.random::<f64>();
                let x = eps * u.powf(-1.0 / alpha);
                if let Some(k) = tempering {
                    if rng.random::<f64>() >= (-k * x).exp() {
                        return None;
                    }
                }
                Some(sign * x)
            }
        }
    }

    /// Streams the segments of one path on `[0, horizon]` started at `x0`.
    ///
    /// Returns `true` if the horizon was reached, `false` if `visit` stopped
    /// early.
    pub fn run<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        x0: f64,
        horizon: f64,
        mut visit: impl FnMut(&Segment) -> ControlFlow<()>,
    ) -> bool {
        let SchemeInfo {
            dt,
            drift,
            diffusion,
            jump_rate,
            ..
        } = self.info;
        let n = (horizon / dt - 1e-9).ceil().max(0.0) as u64;
        let mut next_jump = if jump_rate > 0.0 {
            Distribution::<f64>::sample(&Exp1, rng) / jump_rate
        } else {
            f64::INFINITY
        };
        let mut noise = 0.0;
        let mut jump_total = 0.0;
        let mut t_prev = 0.0;
        let mut c_prev = x0;
        for k in 0..n {
            let t_next = ((k + 1) as f64 * dt).min(horizon);
            let h = t_next - t_prev;
            if diffusion > 0.0 {
                let z: f64 = StandardNormal.sample(rng);
                noise += diffusion * h.sqrt() * z;
            }
            let c_next = x0 + drift * t_next + noise;
            let mut t_cur = t_prev;
            let mut y_cur = c_prev + jump_total;
            while next_jump <= t_next {
                let tau = next_jump;
                next_jump += Distribution::<f64>::sample(&Exp1, rng) / jump_rate;
                let Some(size) = self.jump_size(rng) else {
                    continue;
                };
                let y_minus = c_prev + (c_next - c_prev) * (tau - t_prev) / h + jump_total;
                let seg = Segment {
                    t0: t_cur,
                    t1: tau,
                    y0: y_cur,
                    y1: y_minus,
                    grid_end: false,
                };
                if visit(&seg).is_break() {
                    return false;
                }
                jump_total += size;
                t_cur = tau;
                y_cur = y_minus + size;
            }
            let seg = Segment {
                t0: t_cur,
                t1: t_next,
                y0: y_cur,
                y1: c_next + jump_total,
                grid_end: true,
            };
            if visit(&seg).is_break() {
                return false;
            }
            t_prev = t_next;
            c_prev = c_next;
        }
        true
    }
}
