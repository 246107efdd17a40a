//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use perpetua::analysis::{
    local_time_criterion, perpetual_verdict, potential_density, LocalTimeOptions, LocalTimeOutcome, TestFunction,
    UndecidedReason,
};
use perpetua::harness::{
    divergence_growth_check, finiteness_probability, lln_envelope_check, local_time_invariance_check,
    occupation_identity_check, overshoot_stationarity_check, CheckContext, ExperimentConfig, InvarianceOptions,
    StartLaw,
};
use perpetua::montecarlo::{local_times_until, overshoot_ensemble, passage_cap, LevySource, SimOptions};
use perpetua::{LevyMeasureSpec, LevyTriplet};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn benchmark(name: &str) -> ExperimentConfig {
    let path = root().join("configs/benchmarks/v1").join(format!("{name}.json"));
    ExperimentConfig::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn bm() -> LevyTriplet {
    LevyTriplet::brownian(1.0, 1.0)
}

fn ctx(seed: u64) -> CheckContext {
    CheckContext::new(SimOptions::with_dt(0.01), seed, 0.01)
}

fn ensure(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn verdict_matrix() -> Outcome {
    let index: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(root().join("configs/benchmarks/v1/index.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let mut checked = 0;
    for cell in index["cells"].as_array().ok_or("index has no cells")? {
        let name = cell["config"].as_str().unwrap().trim_end_matches(".json");
        let cfg = benchmark(name);
        let r = perpetual_verdict(&cfg.triplet, &cfg.f);
        let expected = cell["expected_verdict"].as_str().unwrap();
        let got = serde_json::to_value(r.verdict).unwrap();
        if got != expected {
            return Err(format!("{name}: expected {expected}, got {got} ({:?})", r.reasons));
        }
        let process = cell["process"].as_str().unwrap();
        let needed = match process {
            "control_cp_only" => Some(UndecidedReason::IsCompoundPoisson),
            "control_stable05" => Some(UndecidedReason::NoLocalTimes),
            _ => None,
        };
        match needed {
            Some(reason) if !r.reasons.contains(&reason) => {
                return Err(format!("{name}: reasons {:?} lack {}", r.reasons, reason.as_str()));
            }
            None if !r.preconditions_hold() => return Err(format!("{name}: preconditions fail")),
            _ => {}
        }
        checked += 1;
    }
    ensure(checked == 28, format!("{checked} cells match"))
}

fn zero_one_law() -> Outcome {
    let fin = finiteness_probability(&benchmark("bm_drift__exp_decay")).map_err(|e| e.to_string())?;
    let inf = finiteness_probability(&benchmark("bm_drift__power_tail")).map_err(|e| e.to_string())?;
    let (pf, pi) = (fin.p_hat.unwrap_or(f64::NAN), inf.p_hat.unwrap_or(f64::NAN));
    ensure(
        fin.n_paths == 500 && pf >= 0.95 && pi <= 0.05,
        format!("p_hat ExpDecay = {pf}, PowerTail = {pi}"),
    )
}

fn occupation_identity() -> Outcome {
    let r = occupation_identity_check(&bm(), &TestFunction::exp_decay(1.0), 50, 100.0, 0.05, &ctx(3))
        .map_err(|e| e.to_string())?;
    ensure(r.pass, format!("median relative gap {:.2e} (limit 5%)", r.statistic))
}

fn potential_density_oracle() -> Outcome {
    let t = bm();
    let xs = [-2.0, 0.0, 1.0, 3.0];
    let u = potential_density(&t, &xs).map_err(|e| e.to_string())?;
    // Occupation-density oracle: time within 0.1 of x before the path
    // reaches max x + 8, divided by the window width.
    let delta = 0.1;
    let n = 200_000usize;
    let src = LevySource::new(&t, SimOptions::with_dt(0.01), 0.0, 4).map_err(|e| e.to_string())?;
    let stop = xs.iter().cloned().fold(f64::MIN, f64::max) + 8.0;
    let cap = passage_cap(&t, stop).map_err(|e| e.to_string())?;
    let rows = perpetua::montecarlo::par_map(n as u64, |i| local_times_until(&src, i, &xs, delta, stop, cap));
    let mut sums = [0.0; 4];
    for r in rows {
        let r = r.map_err(|e| e.to_string())?;
        for (s, v) in sums.iter_mut().zip(r) {
            *s += v;
        }
    }
    let mc: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();
    let mut worst: f64 = 0.0;
    for (a, b) in u.u_values.iter().zip(&mc) {
        worst = worst.max((a - b).abs() / b);
    }
    let renewal = u.u_values[2..].iter().all(|v| (v - 1.0).abs() <= 0.1);
    ensure(
        worst <= 0.1 && renewal,
        format!("u = {:?}, oracle = {:?}, worst relative gap {worst:.3}", u.u_values, mc),
    )
}

fn local_time_rule() -> Outcome {
    let mut rows = Vec::new();
    for alpha in [0.5, 0.8, 1.2, 1.5, 1.8] {
        let m = LevyMeasureSpec::StableLike {
            alpha,
            scale: 1.0,
            skew: 0.0,
        };
        let pure = local_time_criterion(&LevyTriplet::new(0.0, 0.0, m.clone()), LocalTimeOptions::default())
            .map_err(|e| e.to_string())?;
        let want = if alpha > 1.0 {
            LocalTimeOutcome::HasLocalTimes
        } else {
            LocalTimeOutcome::NoLocalTimes
        };
        if pure.outcome != want {
            return Err(format!("alpha {alpha}: {:?}, want {want:?}", pure.outcome));
        }
        let gauss = local_time_criterion(&LevyTriplet::new(0.0, 1.0, m), LocalTimeOptions::default())
            .map_err(|e| e.to_string())?;
        if gauss.outcome != LocalTimeOutcome::HasLocalTimes {
            return Err(format!("alpha {alpha} with gaussian part: {:?}", gauss.outcome));
        }
        rows.push(format!("{alpha}:{:.2}", pure.tail_exponent));
    }
    Ok(format!("exponents {}", rows.join(" ")))
}

fn overshoot_exactness() -> Outcome {
    let jumps = benchmark("drift_exp_jumps__exp_decay").triplet;
    let r = overshoot_stationarity_check(&jumps, 50.0, 100.0, 10_000, &ctx(6)).map_err(|e| e.to_string())?;
    let bm_over = overshoot_ensemble(&bm(), 20.0, 1000, 6, SimOptions::with_dt(0.01)).map_err(|e| e.to_string())?;
    let zero = bm_over.samples().iter().all(|&o| o == 0.0);
    ensure(
        r.pass && zero,
        format!(
            "KS {:.4} vs {:.4}; BM overshoots all zero: {zero}",
            r.statistic, r.threshold
        ),
    )
}

fn local_time_invariance() -> Outcome {
    let opts = InvarianceOptions {
        bandwidth: 0.05,
        start: StartLaw::Rho,
        ks_threshold: Some(0.05),
        restart_level: 1.0,
    };
    let r = local_time_invariance_check(&bm(), &[1.0, 2.0, 5.0], 5000, opts, &ctx(7)).map_err(|e| e.to_string())?;
    ensure(
        r.pass,
        format!(
            "max KS {:.4} (limit 0.05), {}",
            r.statistic, r.details["ks_against_first"]
        ),
    )
}

fn lln_envelope() -> Outcome {
    let r = lln_envelope_check(&bm(), 50.0, 1000, &ctx(8)).map_err(|e| e.to_string())?;
    ensure(r.pass, format!("fraction inside {:.4} (need 0.99)", r.statistic))
}

fn run_verify(threads: u32, out: &Path) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_perpetua"))
        .arg("verify")
        .arg("--config")
        .arg(root().join("configs/examples/bm_drift_suite.json"))
        .arg("--out")
        .arg(out)
        .arg("--threads")
        .arg(threads.to_string())
        .arg("--seed")
        .arg("2024")
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!(
            "verify with {threads} threads exited {:?}: {}",
            status.status.code(),
            String::from_utf8_lossy(&status.stderr)
        ));
    }
    std::fs::read(out.join("report.json")).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = run_verify(1, &dir.path().join("t1a"))?;
    let b = run_verify(1, &dir.path().join("t1b"))?;
    let c = run_verify(8, &dir.path().join("t8a"))?;
    let d = run_verify(8, &dir.path().join("t8b"))?;
    ensure(
        a == b && a == c && a == d,
        format!(
            "{} byte reports, identical across runs and thread counts: {}",
            a.len(),
            a == b && a == c && a == d
        ),
    )
}

fn divergence_growth() -> Outcome {
    let cfg = benchmark("bm_drift__power_tail");
    let est = finiteness_probability(&cfg).map_err(|e| e.to_string())?;
    let r = divergence_growth_check(&cfg.triplet, &cfg.f, &est, 0.1, 2, cfg.thresholds.tol_abs)
        .map_err(|e| e.to_string())?;
    let incs: Vec<String> = r.details["increments"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| format!("[{}, {}]: {:.4}", v["from"], v["to"], v["increment"].as_f64().unwrap()))
        .collect();
    ensure(
        r.pass,
        format!(
            "{} vs ln 2 = {:.4}, max relative error {:.3}",
            incs.join(", "),
            2f64.ln(),
            r.statistic
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        (
            "verdict correctness on the benchmark matrix",
            Duration::from_secs(60),
            verdict_matrix,
        ),
        ("0-1 law statistics", Duration::from_secs(300), zero_one_law),
        ("occupation identity", Duration::from_secs(120), occupation_identity),
        (
            "potential density against occupation oracle",
            Duration::from_secs(300),
            potential_density_oracle,
        ),
        (
            "local-time criterion on the stable family",
            Duration::from_secs(60),
            local_time_rule,
        ),
        ("overshoot exactness", Duration::from_secs(300), overshoot_exactness),
        (
            "local-time law invariance under rho start",
            Duration::from_secs(600),
            local_time_invariance,
        ),
        ("LLN envelope", Duration::from_secs(120), lln_envelope),
        (
            "determinism across thread counts",
            Duration::from_secs(600),
            determinism,
        ),
        ("divergence growth rate", Duration::from_secs(300), divergence_growth),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let (ok, msg) = match outcome {
            Ok(m) if took <= *limit => (true, m),
            Ok(m) => (false, format!("{m}; took {took:.1?}, limit {limit:?}")),
            Err(m) => (false, m),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<46} {} ({:.1}s) {msg}",
            i + 1,
            name,
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64()
        );
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
