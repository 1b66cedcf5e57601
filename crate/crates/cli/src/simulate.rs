//! `simulate`: Monte-Carlo runs of one configured experiment.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use approachlab::approach::{kappa, ApproachConfig, Blackwell, PotentialLinf};
use approachlab::calibration::{calib_score, run_forecaster, GridForecaster, IidOutcomes, OakesDawid, OutcomeNature, ScoreMode};
use approachlab::engine::{
    monte_carlo, run_episode, Averaging, AwayNature, Episode, FixedNature, IidNature, Mode, MonteCarlo, Nature,
    ScriptedNature, SeriesStats, Strategy, Transcript,
};
use approachlab::geometry::{distance_linf, MixedAction};
use approachlab::regret::{internal_regret_game, norm2_pos, norm_inf_pos, regret_game, Algorithm, BestResponseNature, Learner};
use approachlab::{Error, Result};
use serde::Serialize;

use crate::config::{NatureSpec, PlayerSpec, Resolved, Suite};

#[derive(Debug, Serialize)]
pub struct FinalStats {
    pub mean: f64,
    pub std: f64,
    pub max: f64,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub suite: &'static str,
    pub player: &'static str,
    pub nature: &'static str,
    pub metric: &'static str,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    #[serde(rename = "final")]
    pub final_stats: Option<FinalStats>,
    pub bound: Option<f64>,
    pub bound_formula: &'static str,
    pub pass: bool,
}

fn vector_nature(spec: &NatureSpec, cfg: &Resolved) -> Result<Box<dyn Nature>> {
    let cols = cfg.game.cols;
    Ok(match spec {
        NatureSpec::Uniform => Box::new(IidNature(MixedAction::uniform(cols))),
        NatureSpec::Iid { probs } => Box::new(IidNature(MixedAction::new(probs.clone())?)),
        NatureSpec::Fixed { action } => Box::new(FixedNature(*action)),
        NatureSpec::Scripted { actions } => Box::new(ScriptedNature(actions.clone())),
        NatureSpec::Away => Box::new(AwayNature { target: cfg.target_set()? }),
        NatureSpec::BestResponse => Box::new(BestResponseNature { rho: cfg.scalar_game()? }),
        NatureSpec::OakesDawid => return Err(Error::Argument("oakes-dawid is a calibration nature".into())),
    })
}

fn outcome_nature(spec: &NatureSpec, outcomes: usize) -> Result<Box<dyn OutcomeNature>> {
    Ok(match spec {
        NatureSpec::Uniform => Box::new(IidOutcomes(MixedAction::uniform(outcomes))),
        NatureSpec::Iid { probs } => Box::new(IidOutcomes(MixedAction::new(probs.clone())?)),
        NatureSpec::OakesDawid if outcomes == 2 => Box::new(OakesDawid),
        NatureSpec::OakesDawid => return Err(Error::Argument("oakes-dawid needs two outcomes".into())),
        other => return Err(Error::Argument(format!("nature `{}` cannot generate outcomes", other.name()))),
    })
}

/// Per-stage metric of one transcript under the configured player.
fn series(t: &Transcript, metric: impl Fn(&[f64]) -> Result<f64>) -> Result<Vec<f64>> {
    t.averages(Averaging::Cesaro).iter().map(|a| metric(a)).collect()
}

struct Plan {
    metric: &'static str,
    bound_formula: &'static str,
    bound: Box<dyn Fn(usize) -> f64>,
}

fn plan(cfg: &Resolved) -> Result<Plan> {
    let n_actions = cfg.game.rows as f64;
    Ok(match (&cfg.suite, &cfg.player) {
        (Suite::Approachability, PlayerSpec::PotentialLinf) => {
            let d = cfg.game.dim as f64;
            Plan {
                metric: "linf_distance",
                bound_formula: "14*sqrt(ln(2d)/n)",
                bound: Box::new(move |n| 14.0 * ((2.0 * d).ln() / n as f64).sqrt()),
            }
        }
        (Suite::Approachability, _) => {
            let k = kappa(&cfg.vector_game()?, &cfg.target_set()?);
            Plan { metric: "distance", bound_formula: "sqrt(kappa/n)", bound: Box::new(move |n| (k / n as f64).sqrt()) }
        }
        (Suite::Regret, PlayerSpec::ExpWeights) => Plan {
            metric: "regret_linf",
            bound_formula: "2*sqrt(ln(A)/n)",
            bound: Box::new(move |n| 2.0 * (n_actions.ln() / n as f64).sqrt()),
        },
        (Suite::Regret, PlayerSpec::Internal) => Plan {
            metric: "internal_regret_l2",
            bound_formula: "sqrt(A/n)",
            bound: Box::new(move |n| (n_actions / n as f64).sqrt()),
        },
        (Suite::Regret, _) => Plan {
            metric: "regret_l2",
            bound_formula: "sqrt(A/n)",
            bound: Box::new(move |n| (n_actions / n as f64).sqrt()),
        },
        (Suite::Calibration, _) => {
            let l = cfg.calibration_grid()?.len() as f64;
            Plan {
                metric: "squared_calibration_score",
                bound_formula: "6*sqrt(ln(L)/n)",
                bound: Box::new(move |n| 6.0 * (l.ln() / n as f64).sqrt()),
            }
        }
    })
}

/// Runs one trial; the transcript of trial 0 is exported next to the metric series.
fn trial(cfg: &Resolved, seed: u64, export: Option<&Path>) -> Result<Vec<f64>> {
    match cfg.suite {
        Suite::Approachability => {
            let game = cfg.vector_game()?;
            let target = cfg.target_set()?;
            let mut nature = vector_nature(&cfg.nature, cfg)?;
            let mut player: Box<dyn Strategy> = match cfg.player {
                PlayerSpec::PotentialLinf => Box::new(PotentialLinf::new(&game, &target)?),
                PlayerSpec::Blackwell { restricted } => {
                    let c = ApproachConfig::new(game.clone(), target.clone())?;
                    Box::new(Blackwell { cfg: if restricted { c.restricted() } else { c } })
                }
                _ => unreachable!("validated"),
            };
            let t = run_episode(&Episode::new(&game, cfg.n, seed, Mode::Sampled), player.as_mut(), nature.as_mut())?;
            if let Some(dir) = export {
                t.export(dir, "transcript")?;
            }
            if cfg.player == PlayerSpec::PotentialLinf {
                series(&t, |a| distance_linf(&target, a))
            } else {
                series(&t, |a| target.distance(a))
            }
        }
        Suite::Regret => {
            let rho = cfg.scalar_game()?;
            let (alg, game) = match cfg.player {
                PlayerSpec::RegretMatching => (Algorithm::RegretMatching, regret_game(&rho)?),
                PlayerSpec::ExpWeights => (Algorithm::ExpWeights, regret_game(&rho)?),
                PlayerSpec::Internal => (Algorithm::Internal, internal_regret_game(&rho)?),
                _ => unreachable!("validated"),
            };
            let inf = cfg.player == PlayerSpec::ExpWeights;
            let mut learner = Learner::new(rho, alg)?;
            let mut nature = vector_nature(&cfg.nature, cfg)?;
            let t = run_episode(&Episode::new(&game, cfg.n, seed, Mode::Sampled), &mut learner, nature.as_mut())?;
            if let Some(dir) = export {
                t.export(dir, "transcript")?;
            }
            series(&t, |a| Ok(if inf { norm_inf_pos(a) } else { norm2_pos(a) }))
        }
        Suite::Calibration => {
            let grid = cfg.calibration_grid()?;
            let mut nature = outcome_nature(&cfg.nature, grid.outcomes())?;
            let t = run_forecaster(&mut GridForecaster(grid.clone()), nature.as_mut(), cfg.n, seed)?;
            if let Some(dir) = export {
                let f = fs::File::create(dir.join("transcript.csv")).map_err(io)?;
                t.write_csv(&grid, std::io::BufWriter::new(f))?;
            }
            let mut prefix = approachlab::calibration::CalibTranscript::for_grid(&grid);
            (0..t.len())
                .map(|m| {
                    prefix.push(t.cells()[m], t.outcomes()[m])?;
                    calib_score(&prefix, &grid, ScoreMode::Squared)
                })
                .collect()
        }
    }
}

fn io(e: std::io::Error) -> Error {
    Error::Argument(e.to_string())
}

fn metric_csv(stats: Option<&SeriesStats>) -> String {
    let mut s = String::from("stage,mean,std,max\n");
    if let Some(st) = stats {
        for i in 0..st.mean.len() {
            writeln!(s, "{},{},{},{}", i + 1, st.mean[i], st.std[i], st.max[i]).expect("string write");
        }
    }
    s
}

/// Writes `metric.csv`, `summary.json` and trial 0's transcript; returns the summary.
pub fn run(cfg: &Resolved, threads: Option<usize>) -> Result<Summary> {
    let plan = plan(cfg)?;
    fs::create_dir_all(&cfg.out).map_err(io)?;
    trial(cfg, cfg.seed, Some(&cfg.out))?;
    let stats = if cfg.n == 0 {
        None
    } else {
        Some(monte_carlo(&MonteCarlo { trials: cfg.trials, base_seed: cfg.seed, threads }, |seed| trial(cfg, seed, None))?)
    };
    fs::write(cfg.out.join("metric.csv"), metric_csv(stats.as_ref())).map_err(io)?;
    let final_stats = stats.as_ref().and_then(|s| {
        let i = s.mean.len().checked_sub(1)?;
        Some(FinalStats { mean: s.mean[i], std: s.std[i], max: s.max[i] })
    });
    let bound = (cfg.n > 0).then(|| (plan.bound)(cfg.n));
    let pass = match (&final_stats, bound) {
        (Some(f), Some(b)) => f.mean <= b,
        _ => true,
    };
    let summary = Summary {
        suite: cfg.suite.name(),
        player: cfg.player.name(),
        nature: cfg.nature.name(),
        metric: plan.metric,
        n: cfg.n,
        trials: cfg.trials,
        seed: cfg.seed,
        final_stats,
        bound,
        bound_formula: plan.bound_formula,
        pass,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Internal(e.to_string()))?;
    fs::write(cfg.out.join("summary.json"), json + "\n").map_err(io)?;
    Ok(summary)
}
