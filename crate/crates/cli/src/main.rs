use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use perpetua::analysis::{
    expectation_upper_bound, local_time_criterion, perpetual_verdict, LocalTimeOptions, TestFunction,
};
use perpetua::harness::{
    parse_json, run_experiment, simulate, ConfigError, ExperimentConfig, HarnessError, RunOptions,
};
use perpetua::LevyTriplet;

#[derive(Parser)]
#[command(
    name = "perpetua",
    version,
    about = "Perpetual integrals of Levy processes: verdicts and Monte Carlo checks"
)]
struct Cli {
    /// Overrides the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic verdict for the configured triplet and test function.
    Verdict {
        #[arg(long)]
        config: PathBuf,
    },
    /// Classification flags and the local-time decision of the triplet.
    Classify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Simulates the path ensemble and writes its partial integrals.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Runs verification checks and writes a report bundle.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated check names; defaults to the configured list.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// The subset of a configuration needed by `verdict` and `classify`.
#[derive(serde::Deserialize)]
struct Problem {
    triplet: LevyTriplet,
    f: Option<TestFunction>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(c) => Failure::Config(c.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))
}

fn number(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn print_pairs(format: Format, pairs: &[(&str, Value)], full: &Value) {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(full).expect("serializable")),
        Format::Csv => {
            println!("key,value");
            for (k, v) in pairs {
                let v = match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                println!("{k},{v}");
            }
        }
    }
}

fn cmd_verdict(config: &Path, format: Format) -> Result<i32, Failure> {
    let p: Problem = parse_json(&read_text(config)?)?;
    let f =
        p.f.ok_or_else(|| Failure::Config(format!("{}: missing field `f`", config.display())))?;
    let report = perpetual_verdict(&p.triplet, &f);
    let bound = expectation_upper_bound(&p.triplet, &f).ok();
    let reasons: Vec<&str> = report.reasons.iter().map(|r| r.as_str()).collect();
    let mut pairs = vec![
        ("verdict", json!(report.verdict)),
        ("reasons", json!(reasons.join(";"))),
    ];
    if let Some(i) = &report.integral {
        pairs.push(("tail_test", json!(i.verdict)));
        pairs.push(("integral_value", number(i.value)));
        pairs.push(("integral_error", number(i.error_estimate)));
    }
    if let Some(b) = bound {
        pairs.push(("expectation_upper_bound", number(b)));
    }
    let full = json!({
        "report": report,
        "expectation_upper_bound": bound.map(number),
    });
    print_pairs(format, &pairs, &full);
    Ok(0)
}

fn cmd_classify(config: &Path, format: Format) -> Result<i32, Failure> {
    let p: Problem = parse_json(&read_text(config)?)?;
    p.triplet.ensure_valid().map_err(|e| Failure::Config(e.to_string()))?;
    let flags = p.triplet.classify();
    let lt =
        local_time_criterion(&p.triplet, LocalTimeOptions::default()).map_err(|e| Failure::Runtime(e.to_string()))?;
    let pairs = vec![
        ("is_compound_poisson", json!(flags.is_compound_poisson)),
        ("is_subordinator", json!(flags.is_subordinator)),
        ("is_spectrally_negative", json!(flags.is_spectrally_negative)),
        ("mean", json!(flags.mean)),
        ("mean_is_finite_positive", json!(flags.mean_is_finite_positive)),
        ("effective_variance", number(p.triplet.effective_variance())),
        ("local_times", json!(lt.outcome)),
        ("local_time_exponent", number(lt.tail_exponent)),
    ];
    let full = json!({
        "triplet_id": p.triplet.fingerprint(),
        "flags": flags,
        "effective_variance": number(p.triplet.effective_variance()),
        "local_times": lt,
    });
    print_pairs(format, &pairs, &full);
    Ok(0)
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    Ok(ExperimentConfig::from_json(&read_text(path)?)?)
}

fn cmd_simulate(config: &Path, out: &Path, seed: Option<u64>, format: Format) -> Result<i32, Failure> {
    let cfg = load_config(config)?;
    let r = simulate(&cfg, Some(out), seed)?;
    let e = &r.finiteness;
    let pairs = vec![
        ("p_hat", e.p_hat.map_or(json!("none"), number)),
        ("n_paths", json!(e.n_paths)),
        ("n_finite_like", json!(e.n_finite)),
        ("n_infinite_like", json!(e.n_infinite)),
        ("n_inconclusive", json!(e.n_inconclusive)),
        ("verdict", json!(r.verdict.verdict)),
    ];
    let full = json!({
        "finiteness": e,
        "verdict": r.verdict.verdict,
        "artifacts": r.artifacts,
    });
    print_pairs(format, &pairs, &full);
    Ok(0)
}

fn cmd_verify(
    config: &Path,
    checks: Option<Vec<String>>,
    out: &Path,
    seed: Option<u64>,
    format: Format,
) -> Result<i32, Failure> {
    let cfg = load_config(config)?;
    let opts = RunOptions {
        out_dir: Some(out.to_path_buf()),
        checks,
        seed,
    };
    let report = run_experiment(&cfg, &opts)?;
    match format {
        Format::Json => {
            let rows: Vec<Value> = report
                .checks
                .iter()
                .map(|c| {
                    json!({
                        "name": c.name,
                        "pass": c.pass,
                        "expected_fail": c.expected_fail,
                        "ok": c.ok,
                        "statistic": number(c.statistic),
                        "threshold": number(c.threshold),
                        "error": c.error,
                    })
                })
                .collect();
            let summary = json!({"all_ok": report.all_ok, "checks": rows});
            println!("{}", serde_json::to_string_pretty(&summary).expect("serializable"));
        }
        Format::Csv => {
            println!("name,pass,expected_fail,ok,statistic,threshold");
            for c in &report.checks {
                println!(
                    "{},{},{},{},{},{}",
                    c.name, c.pass, c.expected_fail, c.ok, c.statistic, c.threshold
                );
            }
        }
    }
    Ok(report.exit_code())
}

fn run(cli: Cli) -> Result<i32, Failure> {
    let Cli {
        seed, format, command, ..
    } = cli;
    match command {
        Command::Verdict { config } => cmd_verdict(&config, format),
        Command::Classify { config } => cmd_classify(&config, format),
        Command::Simulate { config, out } => cmd_simulate(&config, &out, seed, format),
        Command::Verify { config, checks, out } => cmd_verify(&config, checks, &out, seed, format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(1);
        }
    };
    let code = match pool.install(|| run(cli)) {
        Ok(code) => code,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            2
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    };
    ExitCode::from(code as u8)
}
