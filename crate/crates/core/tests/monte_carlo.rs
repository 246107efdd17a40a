use std::ops::ControlFlow;

use perpetua::analysis::TestFunction;
use perpetua::levy::CharExponent;
use perpetua::montecarlo::{
    collect_path, ks_critical_value, overshoot_ensemble, par_map, perpetual_estimate, sample_path, LevySource,
    PathSource, SimOptions,
};
use perpetua::{JumpLaw, JumpSign, LevyMeasureSpec, LevyTriplet};

fn terminal_values(t: &LevyTriplet, horizon: f64, n: u64, seed: u64, dt: f64) -> Vec<f64> {
    let src = LevySource::new(t, SimOptions::with_dt(dt), 0.0, seed).unwrap();
    par_map(n, |i| {
        let mut last = 0.0;
        src.run(i, horizon, &mut |s| {
            last = s.y1;
            ControlFlow::Continue(())
        })
        .unwrap();
        last
    })
}

fn exp_jumps_with_drift(path_drift: f64) -> LevyTriplet {
    let law = JumpLaw::Exponential {
        theta: 2.0,
        sign: JumpSign::Positive,
    };
    LevyTriplet::new(
        path_drift + law.truncated_mean(1.0),
        0.0,
        LevyMeasureSpec::CompoundPoisson {
            rate: 1.0,
            jump_law: law,
        },
    )
}

fn spectrally_negative() -> LevyTriplet {
    let law = JumpLaw::Exponential {
        theta: 1.0,
        sign: JumpSign::Negative,
    };
    LevyTriplet::new(
        2.0 + law.truncated_mean(1.0),
        1.0,
        LevyMeasureSpec::CompoundPoisson {
            rate: 1.0,
            jump_law: law,
        },
    )
}

#[test]
fn empirical_characteristic_function_matches_exponent() {
    let cases = [
        LevyTriplet::brownian(1.0, 1.0),
        exp_jumps_with_drift(0.1),
        spectrally_negative(),
        LevyTriplet::new(
            1.0,
            0.0,
            LevyMeasureSpec::StableLike {
                alpha: 1.5,
                scale: 1.0,
                skew: 0.0,
            },
        ),
        LevyTriplet::new(
            0.5,
            0.0,
            LevyMeasureSpec::TemperedStable {
                alpha: 0.6,
                scale: 1.0,
                tempering: 1.0,
                skew: 0.4,
            },
        ),
    ];
    let n = 100_000u64;
    for (k, t) in cases.iter().enumerate() {
        let xs = terminal_values(t, 1.0, n, 1000 + k as u64, 0.01);
        let psi = CharExponent::new(t).unwrap();
        for lambda in [0.5, 1.0, 2.0] {
            let (mut c, mut s, mut c2, mut s2) = (0.0, 0.0, 0.0, 0.0);
            for &x in &xs {
                let (sn, cs) = (lambda * x).sin_cos();
                c += cs;
                s += sn;
                c2 += cs * cs;
                s2 += sn * sn;
            }
            let nf = n as f64;
            let (mc, ms) = (c / nf, s / nf);
            let se_c = ((c2 / nf - mc * mc) / nf).sqrt();
            let se_s = ((s2 / nf - ms * ms) / nf).sqrt();
            let exact = (-psi.eval(lambda)).exp();
            assert!(
                (mc - exact.re).abs() <= 5.0 * se_c + 1e-4 && (ms - exact.im).abs() <= 5.0 * se_s + 1e-4,
                "case {k} lambda {lambda}: ({mc}, {ms}) vs {exact}"
            );
        }
    }
}

#[test]
fn brownian_mean_obeys_clt() {
    let t = LevyTriplet::brownian(1.0, 1.0);
    let n = 20_000u64;
    let xs = terminal_values(&t, 10.0, n, 5, 0.01);
    let mean = xs.iter().sum::<f64>() / n as f64;
    // xi_10 ~ N(10, 10).
    let se = (10.0 / n as f64).sqrt();
    assert!((mean - 10.0).abs() < 5.0 * se, "{mean}");
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!((var - 10.0).abs() < 0.5, "{var}");
}

#[test]
fn paths_are_reproducible_and_thread_independent() {
    let t = spectrally_negative();
    let a = sample_path(&t, 5.0, 0.01, 0.0, 77).unwrap();
    let b = sample_path(&t, 5.0, 0.01, 0.0, 77).unwrap();
    assert_eq!(a, b);
    let c = sample_path(&t, 5.0, 0.01, 0.0, 78).unwrap();
    assert_ne!(a.values, c.values);

    let src = LevySource::new(&t, SimOptions::default(), 0.0, 9).unwrap();
    let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let run = || par_map(64, |i| collect_path(&src, i, 3.0).unwrap().values);
    assert_eq!(pool1.install(run), pool4.install(run));
}

#[test]
fn partial_integrals_are_monotone() {
    let t = exp_jumps_with_drift(0.1);
    let f = TestFunction::indicator(0.0, 3.0);
    let cps: Vec<f64> = (1..=20).map(|k| k as f64).collect();
    for seed in 0..20 {
        let path = sample_path(&t, 20.0, 0.01, 0.0, seed).unwrap();
        let v = perpetual_estimate(&path, &f, &cps).unwrap();
        assert!(v.windows(2).all(|w| w[1] >= w[0]), "{v:?}");
        assert!(v.last().unwrap() <= &20.0);
    }
}

#[test]
fn refinement_keeps_perpetual_mean() {
    // E int_0^T exp-decay along BM with drift; the estimate must be stable in dt.
    let t = LevyTriplet::brownian(1.0, 1.0);
    let f = TestFunction::exp_decay(1.0);
    let cps = [20.0];
    let mean_for = |dt: f64| {
        let src = LevySource::new(&t, SimOptions::with_dt(dt), 0.0, 3).unwrap();
        let v = par_map(4000, |i| {
            let p = collect_path(&src, i, 20.0).unwrap();
            perpetual_estimate(&p, &f, &cps).unwrap()[0]
        });
        v.iter().sum::<f64>() / v.len() as f64
    };
    let (coarse, fine) = (mean_for(0.02), mean_for(0.005));
    assert!((coarse - fine).abs() < 0.05 * fine, "{coarse} vs {fine}");
}

#[test]
fn spectrally_negative_process_creeps_upward() {
    let d = overshoot_ensemble(&spectrally_negative(), 10.0, 500, 4, SimOptions::default()).unwrap();
    assert!(d.samples().iter().all(|&o| o == 0.0));
    let bm = overshoot_ensemble(&LevyTriplet::brownian(1.0, 1.0), 10.0, 500, 4, SimOptions::default()).unwrap();
    assert!(bm.samples().iter().all(|&o| o == 0.0));
}

#[test]
fn overshoot_matches_memoryless_law() {
    // Drift 0.1 plus rate-1 Exp(2) jumps: the stationary overshoot has an
    // atom 1/6 at 0 and is Exp(2) otherwise.
    let t = exp_jumps_with_drift(0.1);
    let n = 10_000;
    let d = overshoot_ensemble(&t, 50.0, n, 21, SimOptions::default()).unwrap();
    let cdf = |x: f64| {
        if x < 0.0 {
            (0.0, 0.0)
        } else {
            let v = 1.0 / 6.0 + 5.0 / 6.0 * (1.0 - (-2.0 * x).exp());
            (if x == 0.0 { 0.0 } else { v }, v)
        }
    };
    let ks = d.ks_one_sample(cdf);
    let crit = ks_critical_value(n, n, 0.01) / std::f64::consts::SQRT_2;
    assert!(ks <= crit, "{ks} > {crit}");
    assert!((d.mean() - 5.0 / 12.0).abs() < 0.03, "{}", d.mean());
}
