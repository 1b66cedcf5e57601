mod config;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use approachlab::approach::weak_approach_demo;
use approachlab::calibration::{run_forecaster, FosterForecaster, FosterMixing, FosterState, OakesDawid};
use approachlab::engine::thread_count;
use approachlab::suites::{self, Budget, SUITES};
use approachlab::{Error, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use config::ExperimentConfig;

/// Approachability, regret and calibration experiments.
///
/// Exit status: 0 on success, 2 when a run finished but violated its bound, 1 on error.
/// `APPROACHLAB_THREADS` caps the number of worker threads.
#[derive(Parser, Debug)]
#[command(name = "approachlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment described by a JSON config; writes metric.csv, summary.json and a transcript.
    Simulate {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        #[arg(long, value_name = "N")]
        trials: Option<usize>,
        #[arg(long, value_name = "S")]
        seed: Option<u64>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[arg(long = "n", value_name = "STAGES")]
        stages: Option<usize>,
    },
    /// Run a verification suite: approach-rates, regret-rates, calibration-rates, lln or equilibria.
    Verify {
        suite: String,
        #[arg(long, value_name = "N", default_value_t = 200)]
        trials: usize,
        #[arg(long, value_name = "S", default_value_t = 0)]
        seed: u64,
        /// Also write the report to DIR/verify-<suite>.json.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Run a demo: weak-approach, oakes-dawid or foster.
    Demo {
        name: String,
        #[arg(long = "n", value_name = "STAGES")]
        stages: Option<usize>,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, value_name = "S", default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    suite: &'a str,
    trials: usize,
    seed: u64,
    pass: bool,
    checks: Vec<suites::Check>,
}

fn threads() -> Option<usize> {
    std::env::var("APPROACHLAB_THREADS").ok().map(|_| thread_count(None))
}

fn simulate(
    config: PathBuf,
    trials: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    stages: Option<usize>,
) -> Result<bool> {
    let mut raw = ExperimentConfig::load(&config)?;
    raw.trials = trials.unwrap_or(raw.trials);
    raw.seed = seed.unwrap_or(raw.seed);
    raw.n = stages.unwrap_or(raw.n);
    raw.out = out.or(raw.out);
    let base = config.parent().map(PathBuf::from).unwrap_or_default();
    let cfg = raw.resolve(&base)?;
    let summary = simulate::run(&cfg, threads())?;
    println!("{}", serde_json::to_string_pretty(&summary).map_err(|e| Error::Internal(e.to_string()))?);
    Ok(summary.pass)
}

fn verify(suite: &str, trials: usize, seed: u64, out: Option<PathBuf>) -> Result<bool> {
    if !SUITES.contains(&suite) {
        return Err(Error::Argument(format!("unknown suite `{suite}` (expected one of {})", SUITES.join(", "))));
    }
    if trials == 0 {
        return Err(Error::Argument("trials must be at least 1".into()));
    }
    let checks = suites::run_suite(suite, &Budget { trials, seed, threads: threads() })?;
    let pass = checks.iter().all(|c| c.passed());
    for c in &checks {
        let rel = if c.at_least { "≥" } else { "≤" };
        eprintln!(
            "[{}] criterion {:>2}  {}: {:.6} {rel} {:.6}",
            if c.passed() { "pass" } else { "FAIL" },
            c.criterion,
            c.label,
            c.measured,
            c.bound
        );
    }
    let report = VerifyReport { suite, trials, seed, pass, checks };
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Internal(e.to_string()))?;
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir).map_err(|e| Error::Argument(e.to_string()))?;
        std::fs::write(dir.join(format!("verify-{suite}.json")), format!("{json}\n"))
            .map_err(|e| Error::Argument(e.to_string()))?;
    }
    println!("{json}");
    Ok(pass)
}

fn demo(name: &str, stages: Option<usize>, eps: f64, seed: u64) -> Result<bool> {
    match name {
        "weak-approach" => {
            let n = stages.unwrap_or(100);
            let natures = suites::weak_approach_natures(n);
            let mut worst = 0.0f64;
            for (label, mut nature) in natures {
                let d = weak_approach_demo(n, nature.as_mut(), seed)?;
                println!("{label:<12} terminal distance after {} stages: {d}", 2 * n);
                worst = worst.max(d);
            }
            println!("terminal distance: {worst} (bound 1/N = {})", 1.0 / n as f64);
            Ok(worst <= 1.0 / n as f64)
        }
        "oakes-dawid" => {
            let n = stages.unwrap_or(10_000);
            let score = suites::frequency_forecaster_score(n)?;
            println!("frequency forecaster vs Oakes–Dawid, ε = 0.1, n = {n}: ε-calibration score {score:.4}");
            Ok(true)
        }
        "foster" => {
            let n = stages.unwrap_or(10_000);
            let mut f = FosterForecaster::new(eps, FosterMixing::Balanced)?;
            let t = run_forecaster(&mut f, &mut OakesDawid, n, seed)?;
            let mut prefix = approachlab::calibration::CalibTranscript::new(t.num_cells(), 2);
            let mut next = 10;
            let max_pos = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(*x));
            println!("Foster forecaster vs Oakes–Dawid, ε = {eps}, L = {}", t.num_cells());
            for m in 0..t.len() {
                prefix.push(t.cells()[m], t.outcomes()[m])?;
                if m + 1 == next || m + 1 == t.len() {
                    let s = FosterState::from_transcript(eps, &prefix)?;
                    println!("n = {:>6}  max e⁺ = {:.5}  max d⁺ = {:.5}", m + 1, max_pos(&s.e), max_pos(&s.d));
                    next *= 10;
                }
            }
            Ok(true)
        }
        other => Err(Error::Argument(format!("unknown demo `{other}` (expected weak-approach, oakes-dawid or foster)"))),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Simulate { config, trials, seed, out, stages } => simulate(config, trials, seed, out, stages),
        Command::Verify { suite, trials, seed, out } => verify(&suite, trials, seed, out),
        Command::Demo { name, stages, eps, seed } => demo(&name, stages, eps, seed),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
