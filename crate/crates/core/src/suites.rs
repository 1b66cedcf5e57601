//! Monte-Carlo experiments comparing empirical rates with their proven bounds.
//!
//! Each experiment returns [`Check`]s carrying the measured quantity, the bound
//! and the parameters the bound was computed from.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::approach::{
    check_approachable, grid_slack, kappa, weak_approach_demo, ApproachConfig, Blackwell, PotentialLinf,
};
use crate::calibration::{
    calib_score, cell_eps_score, eps_calibration_score, run_forecaster, CalibTranscript, EpsForecaster,
    Forecaster, FrequencyForecaster, GridForecaster, IidOutcomes, OakesDawid, OutcomeNature, ScoreMode,
};
use crate::engine::{
    monte_carlo, run_episode, Averaging, AwayNature, Episode, FixedNature, HistoryView, IidNature, Mode,
    MonteCarlo, Nature, NatureMove, ScriptedNature, Strategy, VectorGame,
};
use crate::equilibria::{selfplay, zerosum_optimality, NPlayerGame};
use crate::error::{arg, Error, Result};
use crate::geometry::{
    distance_linf, make_covering_grid, norm, project_onto_hull, ConvexTarget, Coords, Grid, MixedAction,
};
use crate::regret::{
    ext_to_phi_step, internal_regret_game, invariant_step, positive_matrix, positive_part, regret_game,
    regret_matching_step, Algorithm, BestResponseNature, Learner, RegretState, SwapFamily,
};
use crate::zerosum::ScalarGame;

pub const SUITES: [&str; 5] = ["approach-rates", "regret-rates", "calibration-rates", "lln", "equilibria"];

/// One measured quantity against its bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub criterion: u8,
    pub label: String,
    pub measured: f64,
    pub bound: f64,
    /// `true`: passes when `measured ≥ bound`; otherwise when `measured ≤ bound`.
    pub at_least: bool,
    pub params: BTreeMap<String, f64>,
}

impl Check {
    fn at_most(criterion: u8, label: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self { criterion, label: label.into(), measured, bound, at_least: false, params: BTreeMap::new() }
    }

    fn at_least(criterion: u8, label: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self { at_least: true, ..Self::at_most(criterion, label, measured, bound) }
    }

    fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn param(&self, key: &str) -> f64 {
        self.params.get(key).copied().unwrap_or(f64::NAN)
    }

    pub fn passed(&self) -> bool {
        if self.at_least {
            self.measured >= self.bound
        } else {
            self.measured <= self.bound
        }
    }
}

/// Trial counts and seeding shared by all experiments.
#[derive(Clone, Debug, PartialEq)]
pub struct Budget {
    pub trials: usize,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl Default for Budget {
    fn default() -> Self {
        Self { trials: 200, seed: 0, threads: None }
    }
}

impl Budget {
    fn mc(&self, trials: usize, offset: u64) -> MonteCarlo {
        MonteCarlo { trials, base_seed: self.seed.wrapping_add(offset), threads: self.threads }
    }
}

pub fn run_suite(name: &str, budget: &Budget) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    match name {
        "lln" => out.extend(lln(budget, 10_000)?),
        "approach-rates" => {
            out.extend(blackwell_rates(budget)?);
            out.extend(cone_rates(budget)?);
            out.extend(linf_rates(budget)?);
            out.extend(weak_approach(budget)?);
        }
        "regret-rates" => {
            out.extend(external_regret(budget)?);
            out.extend(internal_regret(budget)?);
            out.extend(orthogonality(budget)?);
            out.extend(reduction_identity(budget)?);
        }
        "calibration-rates" => {
            out.extend(grid_calibration(budget)?);
            out.extend(eps_independence(budget)?);
            out.extend(oakes_dawid(budget)?);
        }
        "equilibria" => out.extend(equilibrium_dynamics(budget)?),
        other => return arg(format!("unknown suite `{other}` (expected one of {})", SUITES.join(", "))),
    }
    Ok(out)
}

struct Uniform;

impl Strategy for Uniform {
    fn next(&mut self, view: &HistoryView<'_>) -> Result<MixedAction> {
        Ok(MixedAction::uniform(view.game.rows()))
    }
}

fn averages_at(t: &crate::engine::Transcript, at: &[usize]) -> Vec<Vec<f64>> {
    let avgs = t.averages(Averaging::Cesaro);
    at.iter().map(|&n| avgs[n - 1].clone()).collect()
}

/// Fair ±1 coin, target `{0}`: `E|ḡ_n|² = 1/n`. Passes within three standard errors.
pub fn lln(budget: &Budget, trials: usize) -> Result<Vec<Check>> {
    let at = [10, 100, 1000];
    let game = VectorGame::new(2, 1, 1, vec![-1.0, 1.0])?;
    let stats = monte_carlo(&budget.mc(trials, 0), |seed| {
        let t = run_episode(&Episode::new(&game, 1000, seed, Mode::Sampled), &mut Uniform, &mut FixedNature(0))?;
        Ok(averages_at(&t, &at).iter().map(|a| a[0] * a[0]).collect())
    })?;
    Ok(at
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let gap = (stats.mean[i] - 1.0 / n as f64).abs();
            Check::at_most(1, format!("|mean |ḡ_n|² − 1/n| at n={n}"), gap, 3.0 * stats.stderr(i))
                .with("n", n as f64)
                .with("mean", stats.mean[i])
                .with("stderr", stats.stderr(i))
        })
        .collect())
}

/// A random game with payoffs uniform in `[-1,1]^d`.
fn random_game(rng: &mut ChaCha8Rng, rows: usize, cols: usize, dim: usize, lo: f64) -> Result<VectorGame> {
    let pay = (0..rows * cols * dim).map(|_| rng.gen_range(lo..1.0)).collect();
    VectorGame::new(rows, cols, dim, pay)
}

/// `max_y d(c, co{g(a,y)})` over a grid of Δ(B), plus the grid's Lipschitz slack.
fn ball_radius(game: &VectorGame, c: &[f64], resolution: usize) -> Result<f64> {
    let grid = Grid::simplex(game.cols(), resolution)?;
    let mut r = 0.0f64;
    for y in grid.points() {
        let pts: Vec<Vec<f64>> = (0..game.rows())
            .map(|a| {
                let mut v = vec![0.0; game.dim()];
                for (b, q) in y.iter().enumerate() {
                    for (o, p) in v.iter_mut().zip(game.payoff(a, b)) {
                        *o += q * p;
                    }
                }
                v
            })
            .collect();
        let (p, _) = project_onto_hull(&pts, c)?;
        r = r.max(crate::geometry::dist(&p, c));
    }
    Ok(r + grid_slack(game, resolution))
}

/// `{z : ⟨w, z⟩ ≤ min_x max_y ⟨w, g(x,y)⟩}`: approachable and tight.
fn tight_halfspace(game: &VectorGame, w: Vec<f64>) -> Result<ConvexTarget> {
    let n = norm(&w);
    let w: Vec<f64> = w.iter().map(|v| v / n).collect();
    let data = (0..game.rows())
        .flat_map(|a| (0..game.cols()).map(move |b| (a, b)))
        .map(|(a, b)| -crate::geometry::dot(&w, game.payoff(a, b)))
        .collect();
    let value = -crate::zerosum::solve(&ScalarGame::new(game.rows(), game.cols(), data)?, 1e-12)?.value;
    let pts: Vec<Vec<f64>> = (0..game.rows())
        .flat_map(|a| (0..game.cols()).map(move |b| (a, b)))
        .map(|(a, b)| game.payoff(a, b).to_vec())
        .collect();
    let witness = pts
        .iter()
        .min_by(|p, q| crate::geometry::dot(&w, p).total_cmp(&crate::geometry::dot(&w, q)))
        .expect("nonempty game")
        .clone();
    ConvexTarget::halfspaces(vec![w], vec![value + 1e-12], witness)
}

/// Random approachable instances: a ball, the box around it and a tight halfspace per game.
pub fn approachable_instances(seed: u64, games: usize) -> Result<Vec<(VectorGame, ConvexTarget)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < 3 * games {
        let (a, b, d) = (rng.gen_range(2..=4), rng.gen_range(2..=4), rng.gen_range(1..=3));
        let game = random_game(&mut rng, a, b, d, -1.0)?;
        let weights = MixedAction::from_weights(&(0..a * b).map(|_| rng.gen::<f64>()).collect::<Vec<_>>())?;
        let mut c = vec![0.0; d];
        for (k, w) in weights.probs().iter().enumerate() {
            for (o, p) in c.iter_mut().zip(game.payoff(k / b, k % b)) {
                *o += w * p;
            }
        }
        let r = ball_radius(&game, &c, 12)?;
        let ball = ConvexTarget::ball(c.clone(), r)?;
        let boxed = ConvexTarget::boxed(c.iter().map(|v| v - r).collect(), c.iter().map(|v| v + r).collect())?;
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if norm(&w) < 0.1 {
            continue;
        }
        let half = tight_halfspace(&game, w)?;
        for t in [ball, boxed, half] {
            if check_approachable(&game, &t, 8)?.delta_hat > 1e-6 {
                return Err(Error::Internal("generated target failed the approachability check".into()));
            }
            out.push((game.clone(), t));
        }
    }
    Ok(out)
}

/// Mixed Nature: the away-pushing adversary on even seeds, uniform i.i.d. play on odd ones.
fn adversary(seed: u64, target: &ConvexTarget, cols: usize) -> Box<dyn Nature> {
    if seed % 2 == 0 {
        Box::new(AwayNature { target: target.clone() })
    } else {
        Box::new(IidNature(MixedAction::uniform(cols)))
    }
}

/// Blackwell's strategy on `E_g`: mean `d_E(ḡ_n) ≤ √(κ/n)`.
pub fn blackwell_rates(budget: &Budget) -> Result<Vec<Check>> {
    let at = [100, 1000, 10_000];
    let mut out = Vec::new();
    for (i, (game, target)) in approachable_instances(budget.seed.wrapping_add(11), 2)?.into_iter().enumerate() {
        let k = kappa(&game, &target);
        let cfg = ApproachConfig::new(game.clone(), target.clone())?.restricted();
        let stats = monte_carlo(&budget.mc(budget.trials, 1000 * i as u64), |seed| {
            let mut s = Blackwell { cfg: cfg.clone() };
            let mut nature = adversary(seed, &target, game.cols());
            let t = run_episode(&Episode::new(&game, 10_000, seed, Mode::Sampled), &mut s, nature.as_mut())?;
            crate::engine::metric_at(&t, &target, Averaging::Cesaro, &at)
        })?;
        for (j, &n) in at.iter().enumerate() {
            out.push(
                Check::at_most(2, format!("instance {i}: mean d_E(ḡ_n) at n={n}"), stats.mean[j], (k / n as f64).sqrt())
                    .with("n", n as f64)
                    .with("kappa", k)
                    .with("norm_g", game.norm()),
            );
        }
    }
    Ok(out)
}

/// Blackwell's strategy on the nonpositive orthant of regret games: mean `d ≤ ‖g‖∞/√n`.
pub fn cone_rates(budget: &Budget) -> Result<Vec<Check>> {
    let at = [100, 1000, 10_000];
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed.wrapping_add(22));
    let mut out = Vec::new();
    for (i, actions) in [2usize, 3, 4].into_iter().enumerate() {
        let rho = random_game(&mut rng, actions, 3, 1, 0.0)?;
        let rho = ScalarGame::new(actions, 3, (0..actions * 3).map(|k| rho.payoff(k / 3, k % 3)[0]).collect())?;
        let game = regret_game(&rho)?;
        let target = ConvexTarget::nonpositive_orthant(actions)?;
        let cfg = ApproachConfig::new(game.clone(), target.clone())?;
        let stats = monte_carlo(&budget.mc(budget.trials, 2000 + 1000 * i as u64), |seed| {
            let mut s = Blackwell { cfg: cfg.clone() };
            let mut nature: Box<dyn Nature> = if seed % 2 == 0 {
                Box::new(BestResponseNature { rho: rho.clone() })
            } else {
                Box::new(IidNature(MixedAction::uniform(3)))
            };
            let t = run_episode(&Episode::new(&game, 10_000, seed, Mode::Sampled), &mut s, nature.as_mut())?;
            crate::engine::metric_at(&t, &target, Averaging::Cesaro, &at)
        })?;
        for (j, &n) in at.iter().enumerate() {
            out.push(
                Check::at_most(3, format!("A={actions}: mean d(r̄_n, R₋) at n={n}"), stats.mean[j], game.norm() / (n as f64).sqrt())
                    .with("n", n as f64)
                    .with("norm_g", game.norm()),
            );
        }
    }
    Ok(out)
}

fn clipped_box(c: &[f64], half: f64) -> Result<ConvexTarget> {
    ConvexTarget::boxed(c.iter().map(|v| (v - half).max(0.0)).collect(), c.iter().map(|v| (v + half).min(1.0)).collect())
}

/// The smallest clipped box around `c` that the grid check accepts, widened by the grid slack
/// so that it stays approachable off the grid, and Nature's hardest mixed action against it.
fn tight_box(game: &VectorGame, c: &[f64], radius: f64) -> Result<(ConvexTarget, MixedAction)> {
    let resolution = if game.cols() == 2 { 200 } else { 12 };
    let (mut lo, mut hi) = (0.0, radius);
    for _ in 0..20 {
        let mid = 0.5 * (lo + hi);
        if check_approachable(game, &clipped_box(c, mid)?, resolution)?.delta_hat <= 1e-9 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let witness = check_approachable(game, &clipped_box(c, lo)?, resolution)?.witness_y;
    Ok((clipped_box(c, hi + grid_slack(game, resolution))?, witness))
}

/// Potential-based strategy for boxes in `[0,1]^d`: mean `d∞(ḡ_n) ≤ 14√(ln(2d)/n)`.
pub fn linf_rates(budget: &Budget) -> Result<Vec<Check>> {
    let at: Vec<usize> = (7..=14).map(|k| 1usize << k).collect();
    let horizon = *at.last().expect("nonempty");
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed.wrapping_add(33));
    let mut out = Vec::new();
    for d in [2usize, 4] {
        let (a, b) = (3, 2);
        let game = random_game(&mut rng, a, b, d, 0.0)?;
        let c: Vec<f64> = (0..d).map(|k| (0..a * b).map(|i| game.payoff(i / b, i % b)[k]).sum::<f64>() / (a * b) as f64).collect();
        let (target, hardest) = tight_box(&game, &c, ball_radius(&game, &c, 12)?)?;
        let stats = monte_carlo(&budget.mc(budget.trials, 3000 + d as u64 * 1000), |seed| {
            let mut s = PotentialLinf::new(&game, &target)?;
            let mut nature: Box<dyn Nature> = if seed % 2 == 0 {
                Box::new(AwayNature { target: target.clone() })
            } else {
                Box::new(IidNature(hardest.clone()))
            };
            let t = run_episode(&Episode::new(&game, horizon, seed, Mode::Sampled), &mut s, nature.as_mut())?;
            averages_at(&t, &at).iter().map(|z| distance_linf(&target, z)).collect()
        })?;
        for (j, &n) in at.iter().enumerate() {
            let bound = 14.0 * ((2.0 * d as f64).ln() / n as f64).sqrt();
            out.push(
                Check::at_most(4, format!("d={d}: mean d∞(ḡ_n) at n={n}"), stats.mean[j], bound)
                    .with("n", n as f64)
                    .with("d", d as f64),
            );
        }
    }
    Ok(out)
}

/// Nature playing R for the first `n` stages, then L.
struct RThenL(usize);

impl Nature for RThenL {
    fn next(&mut self, view: &HistoryView<'_>, _: &MixedAction) -> Result<NatureMove> {
        Ok(NatureMove::Pure(usize::from(view.stage < self.0)))
    }
}

/// The Natures the weak-approachability demo is run against at horizon `n`.
pub fn weak_approach_natures(n: usize) -> Vec<(&'static str, Box<dyn Nature>)> {
    vec![
        ("always-L", Box::new(FixedNature(0))),
        ("always-R", Box::new(FixedNature(1))),
        ("random", Box::new(IidNature(MixedAction::uniform(2)))),
        ("alternating", Box::new(ScriptedNature(vec![0, 1]))),
        ("R-then-L", Box::new(RThenL(n))),
    ]
}

/// Two-phase play in the weak-approachability game: terminal distance `≤ 1/N`.
pub fn weak_approach(budget: &Budget) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for n in [10usize, 100, 1000] {
        let natures = weak_approach_natures(n);
        for (name, mut nature) in natures {
            let d = weak_approach_demo(n, nature.as_mut(), budget.seed)?;
            out.push(Check::at_most(11, format!("N={n}, {name}: terminal distance"), d, 1.0 / n as f64).with("N", n as f64));
        }
    }
    Ok(out)
}

fn random_outcomes(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Result<ScalarGame> {
    ScalarGame::new(rows, cols, (0..rows * cols).map(|_| rng.gen::<f64>()).collect())
}

/// Runs a learner on `rho` against an i.i.d. (odd seeds) or best-response (even seeds) Nature.
fn learner_run(rho: &ScalarGame, alg: Algorithm, n: usize, seed: u64) -> Result<crate::engine::Transcript> {
    let game = regret_game(rho)?;
    let mut learner = Learner::new(rho.clone(), alg)?;
    let mut nature: Box<dyn Nature> = if seed % 2 == 0 {
        Box::new(BestResponseNature { rho: rho.clone() })
    } else {
        Box::new(IidNature(MixedAction::uniform(rho.cols())))
    };
    run_episode(&Episode::new(&game, n, seed, Mode::Sampled), &mut learner, nature.as_mut())
}

/// Regret matching `‖r̄⁺‖₂ ≤ √(A/n)` and exponential weights `‖r̄⁺‖∞ ≤ 2√(ln A/n)`, in the mean.
pub fn external_regret(budget: &Budget) -> Result<Vec<Check>> {
    let at = [100, 1000, 10_000];
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed.wrapping_add(44));
    let mut out = Vec::new();
    for actions in [2usize, 5] {
        let rho = random_outcomes(&mut rng, actions, 3)?;
        for (alg, name) in [(Algorithm::RegretMatching, "regret matching"), (Algorithm::ExpWeights, "exponential weights")] {
            let two_norm = alg == Algorithm::RegretMatching;
            let stats = monte_carlo(&budget.mc(budget.trials, 4000 + actions as u64 * 10), |seed| {
                let t = learner_run(&rho, alg.clone(), 10_000, seed)?;
                Ok(averages_at(&t, &at)
                    .iter()
                    .map(|r| {
                        let p = positive_part(r);
                        if two_norm {
                            norm(&p)
                        } else {
                            p.iter().fold(0.0f64, |m, v| m.max(*v))
                        }
                    })
                    .collect())
            })?;
            for (j, &n) in at.iter().enumerate() {
                let bound = if two_norm {
                    (actions as f64 / n as f64).sqrt()
                } else {
                    2.0 * ((actions as f64).ln() / n as f64).sqrt()
                };
                out.push(
                    Check::at_most(5, format!("{name}, A={actions}: mean regret at n={n}"), stats.mean[j], bound)
                        .with("n", n as f64)
                        .with("A", actions as f64)
                        .with("two_norm", f64::from(u8::from(two_norm))),
                );
            }
        }
    }
    Ok(out)
}

fn phi_game(rho: &ScalarGame, family: &SwapFamily) -> Result<VectorGame> {
    VectorGame::from_fn(rho.rows(), rho.cols(), family.len(), |a, b| {
        (0..family.len()).map(|f| rho.get(family.map(f)[a], b) - rho.get(a, b)).collect()
    })
}

/// Internal regret `‖R̄⁺‖₂ ≤ √(A/n)` and Φ-regret `‖R̄^Φ⁺‖₂ ≤ √(A_Φ/n)` for invariant-measure play.
pub fn internal_regret(budget: &Budget) -> Result<Vec<Check>> {
    let at = [100, 1000, 10_000];
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed.wrapping_add(55));
    let mut out = Vec::new();
    for actions in [2usize, 4] {
        let rho = random_outcomes(&mut rng, actions, 3)?;
        let maps: Vec<Vec<usize>> = (0..5).map(|_| (0..actions).map(|_| rng.gen_range(0..actions)).collect()).collect();
        let family = SwapFamily::new(actions, maps)?;
        let cases = [
            ("internal", Algorithm::Internal, internal_regret_game(&rho)?, actions),
            ("Φ", Algorithm::Phi(family.clone()), phi_game(&rho, &family)?, family.a_phi()),
        ];
        for (name, alg, game, scale) in cases {
            let stats = monte_carlo(&budget.mc(budget.trials, 5000 + actions as u64 * 10), |seed| {
                let mut learner = Learner::new(rho.clone(), alg.clone())?;
                let mut nature: Box<dyn Nature> = if seed % 2 == 0 {
                    Box::new(BestResponseNature { rho: rho.clone() })
                } else {
                    Box::new(IidNature(MixedAction::uniform(3)))
                };
                let t = run_episode(&Episode::new(&game, 10_000, seed, Mode::Sampled), &mut learner, nature.as_mut())?;
                Ok(averages_at(&t, &at).iter().map(|r| norm(&positive_part(r))).collect())
            })?;
            for (j, &n) in at.iter().enumerate() {
                out.push(
                    Check::at_most(6, format!("{name} regret, A={actions}: mean ‖R̄⁺‖₂ at n={n}"), stats.mean[j], (scale as f64 / n as f64).sqrt())
                        .with("n", n as f64)
                        .with("scale", scale as f64),
                );
            }
        }
    }
    Ok(out)
}

/// Largest per-stage `|⟨r̄⁺, E_x r(·,b)⟩|` and `|⟨R̄⁺, E_λ R(·,b)⟩|` over 20 random episodes.
pub fn orthogonality(budget: &Budget) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed.wrapping_add(66));
    let (mut ext, mut int) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let actions = rng.gen_range(2..=5);
        let cols = rng.gen_range(2..=4);
        let rho = random_outcomes(&mut rng, actions, cols)?;
        let mut state = RegretState::new(actions, SwapFamily::external(actions))?;
        for _ in 0..500 {
            let rbar = state.external_avg();
            let x = regret_matching_step(&rbar)?;
            let m = positive_matrix(&state.internal_avg());
            let lambda = invariant_step(&m)?;
            let pos = positive_part(&rbar);
            for b in 0..cols {
                let u: Vec<f64> = (0..actions).map(|a| rho.get(a, b)).collect();
                let ux = x.expect(&u);
                if pos.iter().any(|v| *v > 0.0) {
                    ext = ext.max(pos.iter().zip(&u).map(|(p, ua)| p * (ua - ux)).sum::<f64>().abs());
                }
                let mut s = 0.0;
                for a in 0..actions {
                    for k in 0..actions {
                        s += m[a][k] * lambda.probs()[a] * (u[k] - u[a]);
                    }
                }
                int = int.max(s.abs());
            }
            let a = x.sample(rng.gen());
            let b = rng.gen_range(0..cols);
            state.update(a, &(0..actions).map(|k| rho.get(k, b)).collect::<Vec<_>>())?;
        }
    }
    Ok(vec![
        Check::at_most(7, "max |⟨x, E_x[r(a,b)]⟩| over stages", ext, 1e-8),
        Check::at_most(7, "max |⟨M, E_λ[R(a,b)]⟩| over stages", int, 1e-8),
    ])
}

/// `ext_to_phi(Φ_internal) ∘ regret matching` against `invariant_step(R̄⁺)` on 100 histories.
pub fn reduction_identity(budget: &Budget) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed.wrapping_add(77));
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let actions = rng.gen_range(2..=5);
        let family = SwapFamily::internal(actions);
        let mut state = RegretState::new(actions, family.clone())?;
        for _ in 0..rng.gen_range(1..=60) {
            let a = rng.gen_range(0..actions);
            let u: Vec<f64> = (0..actions).map(|_| rng.gen()).collect();
            state.update(a, &u)?;
        }
        let direct = invariant_step(&positive_matrix(&state.internal_avg()))?;
        let reduced = ext_to_phi_step(&regret_matching_step(&state.phi_avg())?, &family)?;
        let gap = direct.probs().iter().zip(reduced.probs()).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        worst = worst.max(gap);
    }
    Ok(vec![Check::at_most(14, "max |λ_direct − λ_reduced| over 100 histories", worst, 1e-6)])
}

fn forecast_mean<F>(budget: &Budget, offset: u64, trials: usize, make: F) -> Result<f64>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    Ok(monte_carlo(&budget.mc(trials, offset), |seed| Ok(vec![make(seed)?]))?.mean[0])
}

fn outcome_nature(seed: u64, outcomes: usize) -> Box<dyn OutcomeNature> {
    if seed % 2 == 0 && outcomes == 2 {
        Box::new(OakesDawid)
    } else {
        let w: Vec<f64> = (0..outcomes).map(|k| 1.0 + k as f64).collect();
        Box::new(IidOutcomes(MixedAction::from_weights(&w).expect("positive weights")))
    }
}

/// Squared-norm grid calibration: mean score `≤ 6√(ln L/n)`, weighted `≤ (6 + 3 max|ν|)√(ln L/n)`.
pub fn grid_calibration(budget: &Budget) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let cases = [(2usize, 4usize, 10_000usize), (3, 4, 2000)];
    for (i, (outcomes, resolution, n)) in cases.into_iter().enumerate() {
        let plain = Grid::simplex(outcomes, resolution)?;
        let nu: Vec<f64> = (0..plain.len()).map(|l| 0.1 * ((l % 3) as f64 - 1.0)).collect();
        let max_nu = nu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let weighted = plain.clone().with_weights(nu)?;
        for (grid, constant, label) in [(plain, 6.0, "plain"), (weighted, 6.0 + 3.0 * max_nu, "weighted")] {
            let mean = forecast_mean(budget, 6000 + 100 * i as u64, budget.trials, |seed| {
                let mut f = GridForecaster(grid.clone());
                let t = run_forecaster(&mut f, outcome_nature(seed, outcomes).as_mut(), n, seed)?;
                calib_score(&t, &grid, ScoreMode::Squared)
            })?;
            let l = grid.len() as f64;
            out.push(
                Check::at_most(8, format!("Ω={outcomes}, L={}, {label}: mean squared score at n={n}", grid.len()), mean, constant * (l.ln() / n as f64).sqrt())
                    .with("n", n as f64)
                    .with("L", l)
                    .with("max_nu", if label == "plain" { 0.0 } else { max_nu }),
            );
        }
    }
    Ok(out)
}

/// ε-forecaster: mean `sup_ℓ (N[ℓ]/n)(‖p[ℓ] − ω̄[ℓ]‖ − ε) ≤ √(1/n)` for every ε.
pub fn eps_independence(budget: &Budget) -> Result<Vec<Check>> {
    let n = 10_000;
    let mut out = Vec::new();
    for (i, eps) in [0.3, 0.1, 0.05].into_iter().enumerate() {
        let grid = make_covering_grid(1, eps)?;
        let mean = forecast_mean(budget, 7000 + 100 * i as u64, budget.trials, |seed| {
            let mut f = EpsForecaster::new(grid.clone())?;
            let t = run_forecaster(&mut f, outcome_nature(seed, 2).as_mut(), n, seed)?;
            cell_eps_score(&t, &grid, eps)
        })?;
        out.push(
            Check::at_most(9, format!("ε={eps}: mean ε-score at n={n}"), mean, (1.0 / n as f64).sqrt())
                .with("n", n as f64)
                .with("eps", eps),
        );
    }
    Ok(out)
}

/// The deterministic frequency forecaster's ε-calibration score against Oakes–Dawid,
/// on the prediction grid `{0, 0.05, …, 1}` with ε = 0.1.
pub fn frequency_forecaster_score(n: usize) -> Result<f64> {
    let grid = Grid::new((0..=20).map(|k| vec![k as f64 / 20.0]).collect(), Coords::Reduced)?;
    let mut f = FrequencyForecaster(grid.clone());
    let t = run_forecaster(&mut f, &mut OakesDawid, n, 0)?;
    eps_calibration_score(&t, &grid, 0.1)
}

/// Randomized grid forecaster against Oakes–Dawid: one seeded transcript.
pub fn grid_forecaster_against_oakes_dawid(grid: &Grid, n: usize, seed: u64) -> Result<CalibTranscript> {
    let mut f = GridForecaster(grid.clone());
    run_forecaster(&mut f as &mut dyn Forecaster, &mut OakesDawid, n, seed)
}

/// Deterministic forecasting fails against Oakes–Dawid; the randomized grid forecaster does not.
pub fn oakes_dawid(budget: &Budget) -> Result<Vec<Check>> {
    let n = 10_000;
    let det = frequency_forecaster_score(n)?;
    let grid = Grid::simplex(2, 4)?;
    let mean = forecast_mean(budget, 8000, budget.trials, |seed| {
        calib_score(&grid_forecaster_against_oakes_dawid(&grid, n, seed)?, &grid, ScoreMode::Squared)
    })?;
    let l = grid.len() as f64;
    Ok(vec![
        Check::at_least(10, format!("frequency forecaster ε-score (ε=0.1) at n={n}"), det, 0.05).with("n", n as f64),
        Check::at_most(10, format!("grid forecaster mean squared score at n={n}"), mean, 6.0 * (l.ln() / n as f64).sqrt())
            .with("n", n as f64)
            .with("L", l),
    ])
}

/// The three fixed 2×2 games used for correlated-equilibrium dynamics.
pub fn equilibrium_games() -> Result<Vec<(&'static str, NPlayerGame)>> {
    let m = |rows: [[f64; 2]; 2]| ScalarGame::from_rows(&rows.map(|r| r.to_vec()));
    Ok(vec![
        ("chicken", NPlayerGame::bimatrix(&m([[6.0, 2.0], [7.0, 0.0]])?, &m([[6.0, 7.0], [2.0, 0.0]])?)?),
        ("battle of the sexes", NPlayerGame::bimatrix(&m([[2.0, 0.0], [0.0, 1.0]])?, &m([[1.0, 0.0], [0.0, 2.0]])?)?),
        ("matching pennies", NPlayerGame::zero_sum(&m([[1.0, -1.0], [-1.0, 1.0]])?)?),
    ])
}

/// All-internal self-play: correlated violation `< 0.05` at `n = 10⁴` on ≥ 95% of seeds;
/// regret-matching self-play in matching pennies: mean exploitability `≤ 4√(A/n)`.
pub fn equilibrium_dynamics(budget: &Budget) -> Result<Vec<Check>> {
    let n = 10_000;
    let mut out = Vec::new();
    for (i, (name, game)) in equilibrium_games()?.into_iter().enumerate() {
        let stats = monte_carlo(&budget.mc(budget.trials, 9000 + 100 * i as u64), |seed| {
            let p = selfplay(&game, &[Algorithm::Internal, Algorithm::Internal], n, seed)?;
            let last = p.checkpoints.last().expect("n ≥ 1");
            let v = last.correlated.iter().fold(0.0f64, |m, x| m.max(*x));
            Ok(vec![f64::from(u8::from(v < 0.05))])
        })?;
        out.push(Check::at_least(12, format!("{name}: share of seeds with correlated violation < 0.05 at n={n}"), stats.mean[0], 0.95).with("n", n as f64));
    }
    let pennies = NPlayerGame::zero_sum(&ScalarGame::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]])?)?;
    let stats = monte_carlo(&budget.mc(budget.trials, 9500), |seed| {
        let p = selfplay(&pennies, &[Algorithm::RegretMatching, Algorithm::RegretMatching], n, seed)?;
        let z = zerosum_optimality(&pennies, &p)?;
        Ok(vec![z.exploitability.0.max(z.exploitability.1)])
    })?;
    out.push(
        Check::at_most(12, format!("matching pennies: mean marginal exploitability at n={n}"), stats.mean[0], 4.0 * (2.0 / n as f64).sqrt())
            .with("n", n as f64)
            .with("A", 2.0),
    );
    Ok(out)
}
