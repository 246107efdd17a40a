//! Path sources, first passage, overshoots and the shifted restart.

use std::ops::ControlFlow;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::empirical::EmpiricalDistribution;
use super::par_map;
use super::path::{Jump, PathSample};
use super::rng::path_rng;
use super::scheme::{SchemeInfo, Segment, SimOptions, Simulator};
use super::McError;
use crate::levy::LevyTriplet;

/// Anything that produces indexed, reproducible paths as segment streams.
pub trait PathSource: Sync {
    /// Streams path `index` on `[0, horizon]` until `visit` breaks.
    /// Returns `Ok(true)` if the horizon was reached.
    fn run(
        &self,
        index: u64,
        horizon: f64,
        visit: &mut dyn FnMut(&Segment) -> ControlFlow<()>,
    ) -> Result<bool, McError>;

    fn scheme(&self) -> SchemeInfo;
    fn seed(&self) -> u64;
    fn triplet_id(&self) -> &str;
}

/// Paths of the process started at a fixed point.
#[derive(Debug, Clone)]
pub struct LevySource {
    sim: Simulator,
    x0: f64,
    seed: u64,
    triplet_id: String,
}

impl LevySource {
    pub fn new(triplet: &LevyTriplet, options: SimOptions, x0: f64, seed: u64) -> Result<Self, McError> {
        Ok(Self {
            sim: Simulator::new(triplet, options)?,
            x0,
            seed,
            triplet_id: triplet.fingerprint(),
        })
    }
}

impl PathSource for LevySource {
    fn run(
        &self,
        index: u64,
        horizon: f64,
        visit: &mut dyn FnMut(&Segment) -> ControlFlow<()>,
    ) -> Result<bool, McError> {
        Ok(self.sim.run(&mut path_rng(self.seed, index), self.x0, horizon, visit))
    }

    fn scheme(&self) -> SchemeInfo {
        self.sim.info()
    }

    fn seed(&self) -> u64 {
        self.seed
    }

    fn triplet_id(&self) -> &str {
        &self.triplet_id
    }
}

/// `(xi_{T_a + t} - a)_{t >= 0}` for `xi` started from a draw of `rho`.
#[derive(Debug, Clone)]
pub struct RestartSource {
    sim: Simulator,
    rho: EmpiricalDistribution,
    level: f64,
    seed: u64,
    cap: f64,
    triplet_id: String,
}

impl RestartSource {
    /// Time allowed for reaching the restart level.
    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn level(&self) -> f64 {
        self.level
    }
}

impl PathSource for RestartSource {
    fn run(
        &self,
        index: u64,
        horizon: f64,
        visit: &mut dyn FnMut(&Segment) -> ControlFlow<()>,
    ) -> Result<bool, McError> {
        let mut rng = path_rng(self.seed, index);
        let start = self.rho.get(rng.random_range(0..self.rho.len()));
        let a = self.level;
        let mut origin: Option<f64> = None;
        let mut reached_horizon = false;
        let mut stopped = false;
        self.sim.run(&mut rng, start, self.cap + horizon, |s| {
            let (t0, y0) = match origin {
                Some(_) => (s.t0, s.y0),
                None => match s.crossing_time(a) {
                    Some(tc) => {
                        origin = Some(tc);
                        (tc, if tc == s.t0 { s.y0 } else { a })
                    }
                    None if s.t1 >= self.cap => return ControlFlow::Break(()),
                    None => return ControlFlow::Continue(()),
                },
            };
            let tau = origin.unwrap();
            let end = tau + horizon;
            let (t1, y1, last) = if s.t1 >= end {
                (end, s.value_at(end), true)
            } else {
                (s.t1, s.y1, false)
            };
            let seg = Segment {
                t0: t0 - tau,
                t1: t1 - tau,
                y0: y0 - a,
                y1: y1 - a,
                grid_end: s.grid_end && !last,
            };
            if visit(&seg).is_break() {
                stopped = true;
                return ControlFlow::Break(());
            }
            if last {
                reached_horizon = true;
                return ControlFlow::Break(());
            }
            ControlFlow::Continue(())
        });
        if origin.is_none() {
            return Err(McError::NotReached {
                path: index,
                level: a,
                cap: self.cap,
            });
        }
        Ok(reached_horizon && !stopped)
    }

    fn scheme(&self) -> SchemeInfo {
        self.sim.info()
    }

    fn seed(&self) -> u64 {
        self.seed
    }

    fn triplet_id(&self) -> &str {
        &self.triplet_id
    }
}

fn positive_mean(triplet: &LevyTriplet) -> Result<f64, McError> {
    match triplet.mean().finite() {
        Some(mu) if mu > 0.0 => Ok(mu),
        _ => Err(McError::PreconditionViolation(format!(
            "mean must be finite and positive, got {:?}",
            triplet.mean()
        ))),
    }
}

/// Default time cap for reaching level `z`: `10 (z + s^2/mu) / mu`.
pub fn passage_cap(triplet: &LevyTriplet, z: f64) -> Result<f64, McError> {
    let mu = positive_mean(triplet)?;
    Ok(10.0 * (z.max(0.0) + triplet.effective_variance() / mu) / mu)
}

pub fn shifted_restart(
    triplet: &LevyTriplet,
    rho: EmpiricalDistribution,
    level: f64,
    options: SimOptions,
    seed: u64,
) -> Result<RestartSource, McError> {
    if !(level > 0.0 && level.is_finite()) {
        return Err(McError::InvalidArgument(format!(
            "restart level must be > 0, got {level}"
        )));
    }
    if rho.is_empty() {
        return Err(McError::InvalidArgument("restart law has no samples".into()));
    }
    let cap = passage_cap(triplet, level)?;
    Ok(RestartSource {
        sim: Simulator::new(triplet, options)?,
        rho,
        level,
        seed,
        cap,
        triplet_id: triplet.fingerprint(),
    })
}

/// Collects path `index` of a source into a [`PathSample`].
pub fn collect_path(source: &dyn PathSource, index: u64, horizon: f64) -> Result<PathSample, McError> {
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut jumps = Vec::new();
    let mut segments = Vec::new();
    let mut prev_end: Option<f64> = None;
    source.run(index, horizon, &mut |s| {
        match prev_end {
            None => {
                times.push(s.t0);
                values.push(s.y0);
            }
            Some(p) if p != s.y0 => jumps.push(Jump {
                time: s.t0,
                size: s.y0 - p,
            }),
            _ => {}
        }
        prev_end = Some(s.y1);
        if s.grid_end || s.t1 >= horizon {
            times.push(s.t1);
            values.push(s.y1);
        }
        segments.push(*s);
        ControlFlow::Continue(())
    })?;
    Ok(PathSample::from_parts(
        times,
        values,
        jumps,
        source.seed(),
        index,
        source.triplet_id().to_string(),
        source.scheme(),
        segments,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstPassageSample {
    pub level: f64,
    /// `None` when the level was not reached within the cap.
    pub passage_time: Option<f64>,
    pub overshoot: Option<f64>,
}

/// First passage above `z` of path `index`, searched on `[0, cap]`.
pub fn first_passage_in(source: &dyn PathSource, index: u64, z: f64, cap: f64) -> Result<FirstPassageSample, McError> {
    let mut hit = None;
    source.run(index, cap, &mut |s| match s.crossing_time(z) {
        Some(t) => {
            // Crossing at the start of a segment is a jump (or the start point).
            let over = if t == s.t0 { s.y0 - z } else { 0.0 };
            hit = Some((t, over.max(0.0)));
            ControlFlow::Break(())
        }
        None => ControlFlow::Continue(()),
    })?;
    Ok(FirstPassageSample {
        level: z,
        passage_time: hit.map(|h| h.0),
        overshoot: hit.map(|h| h.1),
    })
}

pub fn first_passage(
    triplet: &LevyTriplet,
    z: f64,
    seed: u64,
    cap: f64,
    options: SimOptions,
) -> Result<FirstPassageSample, McError> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(McError::InvalidArgument(format!("level must be > 0, got {z}")));
    }
    let source = LevySource::new(triplet, options, 0.0, seed)?;
    first_passage_in(&source, 0, z, cap)
}

/// Overshoots above `z` of paths `0..n`; any path missing the level is an error.
pub fn overshoot_ensemble_in(
    source: &dyn PathSource,
    z: f64,
    n: usize,
    cap: f64,
) -> Result<EmpiricalDistribution, McError> {
    let results = par_map(n as u64, |i| first_passage_in(source, i, z, cap));
    let mut samples = Vec::with_capacity(n);
    for (i, r) in results.into_iter().enumerate() {
        match r?.overshoot {
            Some(o) => samples.push(o),
            None => {
                return Err(McError::NotReached {
                    path: i as u64,
                    level: z,
                    cap,
                })
            }
        }
    }
    EmpiricalDistribution::new(samples)
}

pub fn overshoot_ensemble(
    triplet: &LevyTriplet,
    z: f64,
    n: usize,
    seed: u64,
    options: SimOptions,
) -> Result<EmpiricalDistribution, McError> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(McError::InvalidArgument(format!("level must be > 0, got {z}")));
    }
    let cap = passage_cap(triplet, z)?;
    let source = LevySource::new(triplet, options, 0.0, seed)?;
    overshoot_ensemble_in(&source, z, n, cap)
}

/// Level above the grid at which `L_t(x)` is frozen as a proxy for
/// `L_inf(x)`: `max x + eps + 5 s^2 / mu`.
pub fn linf_stop_level(triplet: &LevyTriplet, x_list: &[f64], bandwidth: f64) -> Result<f64, McError> {
    let mu = positive_mean(triplet)?;
    let top = x_list.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(top + bandwidth + 5.0 * triplet.effective_variance() / mu)
}

/// Box-kernel local times at each `x` accumulated until the path first
/// reaches `stop_level`.
pub fn local_times_until(
    source: &dyn PathSource,
    index: u64,
    x_list: &[f64],
    bandwidth: f64,
    stop_level: f64,
    cap: f64,
) -> Result<Vec<f64>, McError> {
    let mut time_in = vec![0.0; x_list.len()];
    let mut reached = false;
    source.run(index, cap, &mut |s| {
        let d = s.t1 - s.t0;
        if d > 0.0 {
            let (lo, hi) = if s.y0 <= s.y1 { (s.y0, s.y1) } else { (s.y1, s.y0) };
            for (acc, &x) in time_in.iter_mut().zip(x_list) {
                if hi - lo <= 1e-12 * (1.0 + lo.abs()) {
                    if (0.5 * (lo + hi) - x).abs() < bandwidth {
                        *acc += d;
                    }
                } else {
                    let ov = (hi.min(x + bandwidth) - lo.max(x - bandwidth)).max(0.0);
                    *acc += d * ov / (hi - lo);
                }
            }
        }
        if s.y1 >= stop_level {
            reached = true;
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    if !reached {
        return Err(McError::NotReached {
            path: index,
            level: stop_level,
            cap,
        });
    }
    Ok(time_in.into_iter().map(|t| t / (2.0 * bandwidth)).collect())
}
