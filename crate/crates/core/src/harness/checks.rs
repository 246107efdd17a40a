//! Statistical checks tying simulated paths to the analytic results.

use std::fs::File;
use std::io::BufWriter;
use std::ops::ControlFlow;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Map, Value};

use super::config::StartLaw;
use super::finiteness::FinitenessEstimate;
use super::HarnessError;
use crate::analysis::{
    local_time_criterion, perpetual_verdict, LocalTimeOptions, LocalTimeOutcome, TestFunction, Verdict,
};
use crate::levy::LevyTriplet;
use crate::montecarlo::{
    collect_path, ks_critical_value, linf_stop_level, local_times_until, overshoot_ensemble_in, par_map, passage_cap,
    perpetual_estimate, rng::derive_seed, shifted_restart, EmpiricalDistribution, LevySource, OccupationAccumulator,
    PathSource, SimOptions, BANDWIDTH_FLOOR,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    /// Raw outcome: the statistic lies within the threshold.
    pub pass: bool,
    pub expected_fail: bool,
    /// `pass != expected_fail`; this is what the exit code reflects.
    pub ok: bool,
    pub statistic: f64,
    pub threshold: f64,
    pub details: Map<String, Value>,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
    pub error: Option<String>,
}

impl CheckReport {
    pub fn new(name: &str, pass: bool, statistic: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            pass,
            expected_fail: false,
            ok: pass,
            statistic,
            threshold,
            details: Map::new(),
            artifacts: Vec::new(),
            error: None,
        }
    }

    /// A failed check carrying the error that stopped it.
    pub fn failed(name: &str, error: &HarnessError) -> Self {
        let mut r = Self::new(name, false, f64::NAN, f64::NAN);
        r.error = Some(error.to_string());
        r
    }

    pub fn with_detail(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.details.insert(key.into(), value.into());
        self
    }

    pub fn expecting_fail(mut self, expected_fail: bool) -> Self {
        self.expected_fail = expected_fail;
        self.ok = self.pass != expected_fail;
        self
    }
}

/// Settings shared by every check of one experiment.
#[derive(Debug, Clone)]
pub struct CheckContext {
    pub sim: SimOptions,
    /// Seed for this check; sub-streams are derived from it.
    pub seed: u64,
    pub ks_alpha: f64,
    pub tol_abs: f64,
    /// Artifact directory and file-name prefix; `None` writes nothing.
    pub artifacts: Option<(PathBuf, String)>,
}

impl CheckContext {
    pub fn new(sim: SimOptions, seed: u64, ks_alpha: f64) -> Self {
        Self {
            sim,
            seed,
            ks_alpha,
            tol_abs: 1e-3,
            artifacts: None,
        }
    }

    fn sub_seed(&self, tag: u64) -> u64 {
        derive_seed(self.seed, tag)
    }

    fn write_samples(
        &self,
        suffix: &str,
        header: &str,
        d: &EmpiricalDistribution,
    ) -> Result<Option<String>, HarnessError> {
        let Some((dir, prefix)) = &self.artifacts else {
            return Ok(None);
        };
        let rel = format!("artifacts/{prefix}{suffix}.csv");
        let path = dir.join(&rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        d.write_csv(BufWriter::new(File::create(&path)?), header)?;
        Ok(Some(rel))
    }
}

fn positive_mean(triplet: &LevyTriplet) -> Result<f64, HarnessError> {
    match triplet.mean().finite() {
        Some(mu) if mu > 0.0 => Ok(mu),
        _ => Err(HarnessError::PreconditionViolation(format!(
            "mean must be finite and positive, got {:?}",
            triplet.mean()
        ))),
    }
}

fn require_local_times(triplet: &LevyTriplet) -> Result<f64, HarnessError> {
    let d = local_time_criterion(triplet, LocalTimeOptions::default())?;
    if d.outcome != LocalTimeOutcome::HasLocalTimes {
        return Err(HarnessError::PreconditionViolation(format!(
            "local time criterion returned {:?}",
            d.outcome
        )));
    }
    Ok(d.tail_exponent)
}

/// Passes iff `p_hat` lies within `delta` of 0 or of 1.
pub fn zero_one_check(estimate: &FinitenessEstimate, delta: f64) -> CheckReport {
    let (pass, stat) = match estimate.p_hat {
        Some(p) => {
            let d = p.min(1.0 - p);
            (d <= delta, d)
        }
        None => (false, f64::NAN),
    };
    let mut r = CheckReport::new("zero_one", pass, stat, delta)
        .with_detail("p_hat", estimate.p_hat)
        .with_detail("n_finite_like", estimate.n_finite)
        .with_detail("n_infinite_like", estimate.n_infinite)
        .with_detail("n_inconclusive", estimate.n_inconclusive)
        .with_detail("inconclusive_flag", estimate.inconclusive_flag);
    if estimate.p_hat.is_none() {
        r.error = Some("no path was classified".into());
    }
    r
}

/// Compares the analytic verdict with the side of `{0, 1}` chosen by
/// `p_hat`. An undecided verdict passes with nothing to compare.
pub fn theorem_consistency_check(
    triplet: &LevyTriplet,
    f: &TestFunction,
    estimate: &FinitenessEstimate,
    delta: f64,
) -> CheckReport {
    let verdict = perpetual_verdict(triplet, f);
    let p = estimate.p_hat;
    let (pass, stat) = match (verdict.verdict, p) {
        (Verdict::AsFinite, Some(p)) => (p >= 1.0 - delta, 1.0 - p),
        (Verdict::AsInfinite, Some(p)) => (p <= delta, p),
        (Verdict::Undecided, _) => (true, 0.0),
        (_, None) => (false, f64::NAN),
    };
    CheckReport::new("theorem_consistency", pass, stat, delta)
        .with_detail("verdict", json!(verdict.verdict))
        .with_detail(
            "reasons",
            json!(verdict.reasons.iter().map(|r| r.as_str()).collect::<Vec<_>>()),
        )
        .with_detail("p_hat", p)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Upper limit on occupation grid points per path.
const MAX_GRID_POINTS: f64 = 200_000.0;

/// Direct time integral against `int f(x) L_T(x) dx` on `n_paths` paths.
/// Passes iff the median relative gap is at most 5%.
pub fn occupation_identity_check(
    triplet: &LevyTriplet,
    f: &TestFunction,
    n_paths: usize,
    horizon: f64,
    bandwidth: f64,
    ctx: &CheckContext,
) -> Result<CheckReport, HarnessError> {
    const MAX_GAP: f64 = 0.05;
    let exponent = require_local_times(triplet)?;
    let source = LevySource::new(triplet, ctx.sim, 0.0, ctx.sub_seed(1))?;
    let floor = BANDWIDTH_FLOOR * source.scheme().diffusion * source.scheme().dt.sqrt();
    if bandwidth < floor {
        return Err(crate::montecarlo::McError::BandwidthTooSmall { bandwidth, floor }.into());
    }
    let checkpoint = [horizon];
    let rows = par_map(n_paths as u64, |i| -> Result<(f64, f64, f64), HarnessError> {
        let path = collect_path(&source, i, horizon)?;
        let direct = perpetual_estimate(&path, f, &checkpoint)?[0];
        let (lo, hi) = path
            .segments()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s.y0).min(s.y1), hi.max(s.y0).max(s.y1))
            });
        let (lo, hi) = (lo - 2.0 * bandwidth, hi + 2.0 * bandwidth);
        let step = (bandwidth / 4.0).max((hi - lo) / MAX_GRID_POINTS);
        let n = ((hi - lo) / step).ceil() as usize + 1;
        let grid: Vec<f64> = (0..n).map(|k| lo + k as f64 * step).collect();
        let mut acc = OccupationAccumulator::new(&grid, bandwidth)?;
        for s in path.segments() {
            acc.push(s);
        }
        let field = acc.finish();
        let via_lt = field.integrate(|x| f.eval(x));
        let gap = (direct - via_lt).abs() / direct.abs().max(ctx.tol_abs);
        Ok((gap, direct, field.conservation_ratio()))
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    let gap = median(rows.iter().map(|r| r.0).collect());
    Ok(CheckReport::new("occupation_identity", gap <= MAX_GAP, gap, MAX_GAP)
        .with_detail("n_paths", n_paths)
        .with_detail("horizon", horizon)
        .with_detail("bandwidth", bandwidth)
        .with_detail("local_time_exponent", exponent)
        .with_detail("median_direct_integral", median(rows.iter().map(|r| r.1).collect()))
        .with_detail("median_conservation_ratio", median(rows.iter().map(|r| r.2).collect())))
}

/// Two-sample KS between overshoot ensembles above `z1` and `z2`.
pub fn overshoot_stationarity_check(
    triplet: &LevyTriplet,
    z1: f64,
    z2: f64,
    n: usize,
    ctx: &CheckContext,
) -> Result<CheckReport, HarnessError> {
    let mu = positive_mean(triplet)?;
    if !(z1 > 0.0 && z1 < z2 && z2.is_finite()) {
        return Err(HarnessError::InvalidArgument(format!(
            "need 0 < z1 < z2, got {z1}, {z2}"
        )));
    }
    let scale = triplet.effective_variance() / mu;
    let a = overshoot_ensemble_in(
        &LevySource::new(triplet, ctx.sim, 0.0, ctx.sub_seed(1))?,
        z1,
        n,
        passage_cap(triplet, z1)?,
    )?;
    let b = overshoot_ensemble_in(
        &LevySource::new(triplet, ctx.sim, 0.0, ctx.sub_seed(2))?,
        z2,
        n,
        passage_cap(triplet, z2)?,
    )?;
    let ks = a.ks_two_sample(&b);
    let threshold = ks_critical_value(n, n, ctx.ks_alpha);
    let mut r = CheckReport::new("overshoot_stationarity", ks <= threshold, ks, threshold)
        .with_detail("z1", z1)
        .with_detail("z2", z2)
        .with_detail("n", n)
        .with_detail("ks_alpha", ctx.ks_alpha)
        .with_detail("pre_asymptotic", z1 < 20.0 * scale)
        .with_detail("mean_overshoot_z1", a.mean())
        .with_detail("mean_overshoot_z2", b.mean());
    r.artifacts.extend(ctx.write_samples("overshoot_z1", "overshoot", &a)?);
    r.artifacts.extend(ctx.write_samples("overshoot_z2", "overshoot", &b)?);
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvarianceOptions {
    pub bandwidth: f64,
    pub start: StartLaw,
    /// `None` uses the asymptotic KS critical value.
    pub ks_threshold: Option<f64>,
    /// Level at which restarted paths are re-anchored.
    pub restart_level: f64,
}

/// Harvest level for the empirical stationary overshoot law:
/// `max(1, 100 s^2 / mu)`.
pub fn rho_level(triplet: &LevyTriplet) -> Result<f64, HarnessError> {
    let mu = positive_mean(triplet)?;
    Ok((100.0 * triplet.effective_variance() / mu).max(1.0))
}

/// Samples of the `L_inf` proxy at each level of `x_list`, compared by KS
/// against the first level.
pub fn local_time_invariance_check(
    triplet: &LevyTriplet,
    x_list: &[f64],
    n: usize,
    options: InvarianceOptions,
    ctx: &CheckContext,
) -> Result<CheckReport, HarnessError> {
    positive_mean(triplet)?;
    require_local_times(triplet)?;
    if x_list.is_empty() || !x_list.iter().all(|x| x.is_finite() && *x > 0.0) {
        return Err(HarnessError::InvalidArgument(
            "x_list needs positive finite levels".into(),
        ));
    }
    let eps = options.bandwidth;
    let stop = linf_stop_level(triplet, x_list, eps)?;
    let mut details = Map::new();
    details.insert("x_list".into(), json!(x_list));
    details.insert("n".into(), json!(n));
    details.insert("bandwidth".into(), json!(eps));
    details.insert("stop_level".into(), json!(stop));
    details.insert("start".into(), json!(options.start));

    let source: Box<dyn PathSource> = match options.start {
        StartLaw::Fixed => Box::new(LevySource::new(triplet, ctx.sim, 0.0, ctx.sub_seed(1))?),
        StartLaw::Rho => {
            let z = rho_level(triplet)?;
            let rho = overshoot_ensemble_in(
                &LevySource::new(triplet, ctx.sim, 0.0, ctx.sub_seed(2))?,
                z,
                n,
                passage_cap(triplet, z)?,
            )?;
            // Gate: the harvest must agree with a harvest at twice the level.
            let m = n.min(2000);
            let check = overshoot_ensemble_in(
                &LevySource::new(triplet, ctx.sim, 0.0, ctx.sub_seed(3))?,
                2.0 * z,
                m,
                passage_cap(triplet, 2.0 * z)?,
            )?;
            let gate = rho.ks_two_sample(&check);
            let gate_threshold = ks_critical_value(n, m, ctx.ks_alpha);
            details.insert("rho_level".into(), json!(z));
            details.insert("rho_mean".into(), json!(rho.mean()));
            details.insert("rho_gate_ks".into(), json!(gate));
            details.insert("rho_gate_threshold".into(), json!(gate_threshold));
            details.insert("restart_level".into(), json!(options.restart_level));
            if gate > gate_threshold {
                let mut r = CheckReport::new("local_time_invariance", false, gate, gate_threshold);
                r.details = details;
                r.error = Some("empirical overshoot law failed its stationarity self-check".into());
                return Ok(r);
            }
            Box::new(shifted_restart(
                triplet,
                rho,
                options.restart_level,
                ctx.sim,
                ctx.sub_seed(4),
            )?)
        }
    };
    let cap = passage_cap(triplet, stop)?;
    let rows = par_map(n as u64, |i| {
        local_times_until(source.as_ref(), i, x_list, eps, stop, cap)
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut dists = Vec::with_capacity(x_list.len());
    for j in 0..x_list.len() {
        dists.push(EmpiricalDistribution::new(rows.iter().map(|r| r[j]).collect())?);
    }
    let ks: Vec<f64> = dists.iter().map(|d| dists[0].ks_two_sample(d)).collect();
    let stat = ks.iter().cloned().fold(0.0, f64::max);
    let threshold = options
        .ks_threshold
        .unwrap_or_else(|| ks_critical_value(n, n, ctx.ks_alpha));
    details.insert("ks_against_first".into(), json!(ks));
    details.insert(
        "means".into(),
        json!(dists.iter().map(|d| d.mean()).collect::<Vec<_>>()),
    );
    let mut r = CheckReport::new("local_time_invariance", stat <= threshold, stat, threshold);
    r.details = details;
    for (x, d) in x_list.iter().zip(&dists) {
        r.artifacts
            .extend(ctx.write_samples(&format!("linf_x{x}"), "local_time", d)?);
    }
    Ok(r)
}

/// Share of paths with `mu t / 2 < xi_t < 2 mu t` at every grid time in
/// `[t0, 4 t0]`; passes iff at least 0.99.
pub fn lln_envelope_check(
    triplet: &LevyTriplet,
    t0: f64,
    n: usize,
    ctx: &CheckContext,
) -> Result<CheckReport, HarnessError> {
    const MIN_FRACTION: f64 = 0.99;
    let mu = positive_mean(triplet)?;
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(HarnessError::InvalidArgument(format!("t0 must be > 0, got {t0}")));
    }
    let horizon = 4.0 * t0;
    let source = LevySource::new(triplet, ctx.sim, 0.0, ctx.sub_seed(1))?;
    let inside = par_map(n as u64, |i| -> Result<bool, HarnessError> {
        let mut ok = true;
        source.run(i, horizon, &mut |s| {
            if s.t1 >= t0 && (s.grid_end || s.t1 >= horizon) && !(0.5 * mu * s.t1 < s.y1 && s.y1 < 2.0 * mu * s.t1) {
                ok = false;
                return ControlFlow::Break(());
            }
            ControlFlow::Continue(())
        })?;
        Ok(ok)
    });
    let inside = inside.into_iter().collect::<Result<Vec<_>, _>>()?;
    let fraction = inside.iter().filter(|&&b| b).count() as f64 / n as f64;
    let t0_min = 50.0 * triplet.effective_variance() / (mu * mu);
    Ok(
        CheckReport::new("lln_envelope", fraction >= MIN_FRACTION, fraction, MIN_FRACTION)
            .with_detail("t0", t0)
            .with_detail("horizon", horizon)
            .with_detail("n", n)
            .with_detail("mean", mu)
            .with_detail("t0_below_recommended", t0 < t0_min),
    )
}

/// Default envelope start `max(1, 50 s^2 / mu^2)`.
pub fn lln_default_t0(triplet: &LevyTriplet) -> Result<f64, HarnessError> {
    let mu = positive_mean(triplet)?;
    Ok((50.0 * triplet.effective_variance() / (mu * mu)).max(1.0))
}

/// Ensemble increments of the partial integral over the last `doublings`
/// doublings against the law-of-large-numbers value
/// `int_T^{2T} f(mu s) ds = (F(2 mu T) - F(mu T)) / mu`.
pub fn divergence_growth_check(
    triplet: &LevyTriplet,
    f: &TestFunction,
    estimate: &FinitenessEstimate,
    tolerance: f64,
    doublings: usize,
    tol_abs: f64,
) -> Result<CheckReport, HarnessError> {
    let mu = positive_mean(triplet)?;
    let cps = &estimate.checkpoints;
    let g = &estimate.growth_curve;
    let k = cps.len();
    if doublings == 0 || doublings >= k {
        return Err(HarnessError::InvalidArgument(format!(
            "doublings must lie in 1..{k}, got {doublings}"
        )));
    }
    let mut stat: f64 = 0.0;
    let mut pass = true;
    let mut rows = Vec::new();
    for j in k - doublings..k {
        let emp = g[j] - g[j - 1];
        let oracle = (f.antiderivative(mu * cps[j]) - f.antiderivative(mu * cps[j - 1])) / mu;
        let err = (emp - oracle).abs() / oracle.abs().max(tol_abs);
        pass &= (emp - oracle).abs() <= tolerance * oracle.abs() + tol_abs;
        stat = stat.max(err);
        rows.push(json!({"from": cps[j - 1], "to": cps[j], "increment": emp, "oracle": oracle}));
    }
    let monotone = g.windows(2).all(|w| w[1] >= w[0]);
    Ok(CheckReport::new("divergence_growth", pass, stat, tolerance)
        .with_detail("increments", Value::Array(rows))
        .with_detail("growth_curve_monotone", monotone))
}
