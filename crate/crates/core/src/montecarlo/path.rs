//! Stored paths and the estimators that integrate along them.

use std::io::Write;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use super::rng::path_rng;
use super::scheme::{SchemeInfo, Segment, SimOptions, Simulator};
use super::McError;
use crate::analysis::TestFunction;
use crate::levy::LevyTriplet;

/// Smallest bandwidth relative to the per-step diffusion `sigma sqrt(dt)`.
pub const BANDWIDTH_FLOOR: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub time: f64,
    pub size: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub times: Vec<f64>,
    /// Values at `times`, jumps included.
    pub values: Vec<f64>,
    pub jumps: Vec<Jump>,
    pub seed: u64,
    pub stream: u64,
    pub triplet_id: String,
    pub scheme: SchemeInfo,
    segments: Vec<Segment>,
}

impl PathSample {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        times: Vec<f64>,
        values: Vec<f64>,
        jumps: Vec<Jump>,
        seed: u64,
        stream: u64,
        triplet_id: String,
        scheme: SchemeInfo,
        segments: Vec<Segment>,
    ) -> Self {
        Self {
            times,
            values,
            jumps,
            seed,
            stream,
            triplet_id,
            scheme,
            segments,
        }
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), McError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time", "value"])?;
        for (t, v) in self.times.iter().zip(&self.values) {
            w.write_record([t.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Simulates path `stream` of the ensemble keyed by `seed`.
pub fn sample_path_stream(
    triplet: &LevyTriplet,
    horizon: f64,
    options: SimOptions,
    x0: f64,
    seed: u64,
    stream: u64,
) -> Result<PathSample, McError> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(McError::InvalidArgument(format!("horizon must be > 0, got {horizon}")));
    }
    if options.dt > horizon / 10.0 {
        return Err(McError::InvalidArgument(format!(
            "dt = {} exceeds horizon / 10 = {}",
            options.dt,
            horizon / 10.0
        )));
    }
    let sim = Simulator::new(triplet, options)?;
    let mut times = vec![0.0];
    let mut values = vec![x0];
    let mut jumps = Vec::new();
    let mut segments = Vec::new();
    let mut prev_end = x0;
    sim.run(&mut path_rng(seed, stream), x0, horizon, |s| {
        if s.y0 != prev_end {
            jumps.push(Jump {
                time: s.t0,
                size: s.y0 - prev_end,
            });
        }
        prev_end = s.y1;
        if s.grid_end {
            times.push(s.t1);
            values.push(s.y1);
        }
        segments.push(*s);
        ControlFlow::Continue(())
    });
    Ok(PathSample {
        times,
        values,
        jumps,
        seed,
        stream,
        triplet_id: triplet.fingerprint(),
        scheme: sim.info(),
        segments,
    })
}

pub fn sample_path(triplet: &LevyTriplet, horizon: f64, dt: f64, x0: f64, seed: u64) -> Result<PathSample, McError> {
    sample_path_stream(triplet, horizon, SimOptions::with_dt(dt), x0, seed, 0)
}

fn check_checkpoints(checkpoints: &[f64]) -> Result<(), McError> {
    if !checkpoints.iter().all(|c| c.is_finite() && *c >= 0.0) || !checkpoints.windows(2).all(|w| w[0] < w[1]) {
        return Err(McError::InvalidArgument(
            "checkpoints must be finite, non-negative and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Running `int_0^t f(xi_s) ds` recorded at checkpoints, fed segment by
/// segment. Each linear piece is integrated exactly.
#[derive(Debug, Clone)]
pub struct PerpetualAccumulator<'a> {
    f: &'a TestFunction,
    checkpoints: &'a [f64],
    next: usize,
    total: f64,
    out: Vec<f64>,
}

impl<'a> PerpetualAccumulator<'a> {
    pub fn new(f: &'a TestFunction, checkpoints: &'a [f64]) -> Result<Self, McError> {
        check_checkpoints(checkpoints)?;
        let mut acc = Self {
            f,
            checkpoints,
            next: 0,
            total: 0.0,
            out: Vec::with_capacity(checkpoints.len()),
        };
        acc.flush_until(0.0);
        Ok(acc)
    }

    fn flush_until(&mut self, t: f64) {
        while self.next < self.checkpoints.len() && self.checkpoints[self.next] <= t {
            self.out.push(self.total);
            self.next += 1;
        }
    }

    fn add(&mut self, t0: f64, t1: f64, y0: f64, y1: f64) {
        if t1 > t0 {
            self.total += self.f.segment_time_integral(y0, y1, t1 - t0);
        }
    }

    pub fn push(&mut self, s: &Segment) {
        let mut t0 = s.t0;
        let mut y0 = s.y0;
        while self.next < self.checkpoints.len() && self.checkpoints[self.next] < s.t1 {
            let c = self.checkpoints[self.next];
            if c > t0 {
                let yc = s.value_at(c);
                self.add(t0, c, y0, yc);
                t0 = c;
                y0 = yc;
            }
            self.flush_until(c);
        }
        self.add(t0, s.t1, y0, s.y1);
        self.flush_until(s.t1);
    }

    /// True once every checkpoint has been recorded.
    pub fn is_complete(&self) -> bool {
        self.next == self.checkpoints.len()
    }

    pub fn current(&self) -> f64 {
        self.total
    }

    /// Checkpoint values; any beyond the fed segments hold the final total.
    pub fn finish(mut self) -> Vec<f64> {
        while self.out.len() < self.checkpoints.len() {
            self.out.push(self.total);
        }
        self.out
    }
}

/// Partial integrals `int_0^c f(xi_s) ds` at each checkpoint `c`.
pub fn perpetual_estimate(path: &PathSample, f: &TestFunction, checkpoints: &[f64]) -> Result<Vec<f64>, McError> {
    if let Some(&last) = checkpoints.last() {
        if last > path.horizon() * (1.0 + 1e-12) {
            return Err(McError::InvalidArgument(format!(
                "checkpoint {last} beyond path horizon {}",
                path.horizon()
            )));
        }
    }
    let mut acc = PerpetualAccumulator::new(f, checkpoints)?;
    for s in path.segments() {
        acc.push(s);
    }
    Ok(acc.finish())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeField {
    pub x_grid: Vec<f64>,
    pub bandwidth: f64,
    pub values: Vec<f64>,
    /// Time span covered by the fed segments.
    pub t: f64,
    /// Time spent inside `[x_grid[0], x_grid[last]]`.
    pub t_covered: f64,
}

impl LocalTimeField {
    /// Trapezoid rule for `int g(x) L(x) dx` over the grid.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.x_grid
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, v)| 0.5 * (x[1] - x[0]) * (g(x[0]) * v[0] + g(x[1]) * v[1]))
            .sum()
    }

    pub fn mass(&self) -> f64 {
        self.integrate(|_| 1.0)
    }

    /// `mass / t_covered`, ideally 1.
    pub fn conservation_ratio(&self) -> f64 {
        if self.t_covered > 0.0 {
            self.mass() / self.t_covered
        } else {
            f64::NAN
        }
    }
}

/// Box-kernel occupation density on a grid, fed segment by segment.
#[derive(Debug, Clone)]
pub struct OccupationAccumulator {
    grid: Vec<f64>,
    eps: f64,
    time_in_window: Vec<f64>,
    t_start: Option<f64>,
    t_end: f64,
    t_covered: f64,
}

fn overlap(lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    (hi.min(b) - lo.max(a)).max(0.0)
}

impl OccupationAccumulator {
    pub fn new(x_grid: &[f64], bandwidth: f64) -> Result<Self, McError> {
        if x_grid.len() < 2 || !x_grid.iter().all(|x| x.is_finite()) || !x_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(McError::InvalidArgument(
                "x_grid needs at least two finite, strictly increasing points".into(),
            ));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(McError::BandwidthTooSmall { bandwidth, floor: 0.0 });
        }
        Ok(Self {
            grid: x_grid.to_vec(),
            eps: bandwidth,
            time_in_window: vec![0.0; x_grid.len()],
            t_start: None,
            t_end: 0.0,
            t_covered: 0.0,
        })
    }

    pub fn push(&mut self, s: &Segment) {
        self.t_start.get_or_insert(s.t0);
        self.t_end = s.t1;
        let d = s.t1 - s.t0;
        if d <= 0.0 {
            return;
        }
        let (lo, hi) = if s.y0 <= s.y1 { (s.y0, s.y1) } else { (s.y1, s.y0) };
        let (g0, g1) = (self.grid[0], *self.grid.last().unwrap());
        let eps = self.eps;
        if hi - lo <= 1e-12 * (1.0 + lo.abs()) {
            let y = 0.5 * (lo + hi);
            if (g0..=g1).contains(&y) {
                self.t_covered += d;
            }
            let first = self.grid.partition_point(|&x| x + eps <= y);
            for i in first..self.grid.len() {
                let x = self.grid[i];
                if x - eps >= y {
                    break;
                }
                if (y - x).abs() < eps {
                    self.time_in_window[i] += d;
                }
            }
            return;
        }
        let rate = d / (hi - lo);
        self.t_covered += rate * overlap(lo, hi, g0, g1);
        let first = self.grid.partition_point(|&x| x + eps <= lo);
        for i in first..self.grid.len() {
            let x = self.grid[i];
            if x - eps >= hi {
                break;
            }
            self.time_in_window[i] += rate * overlap(lo, hi, x - eps, x + eps);
        }
    }

    pub fn finish(self) -> LocalTimeField {
        let scale = 0.5 / self.eps;
        LocalTimeField {
            values: self.time_in_window.iter().map(|t| t * scale).collect(),
            x_grid: self.grid,
            bandwidth: self.eps,
            t: self.t_end - self.t_start.unwrap_or(0.0),
            t_covered: self.t_covered,
        }
    }
}

/// `L_T(x_i) ~ (1/2 eps) |{s <= T : |xi_s - x_i| < eps}|` along the linear
/// skeleton.
pub fn local_time_field(path: &PathSample, x_grid: &[f64], bandwidth: f64) -> Result<LocalTimeField, McError> {
    let floor = BANDWIDTH_FLOOR * path.scheme.diffusion * path.scheme.dt.sqrt();
    if bandwidth < floor {
        return Err(McError::BandwidthTooSmall { bandwidth, floor });
    }
    let mut acc = OccupationAccumulator::new(x_grid, bandwidth)?;
    for s in path.segments() {
        acc.push(s);
    }
    Ok(acc.finish())
}
