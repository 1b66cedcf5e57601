//! Self-play and equilibrium diagnostics computed from empirical play.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calibration::regret_from_sums;
use crate::error::{arg, check_dim, Error, Result};
use crate::geometry::MixedAction;
use crate::regret::{invariant_step, positive_matrix, Algorithm, Learner, RegretState};
use crate::zerosum::{exploitability, solve, ScalarGame};

/// Payoff tensors `ρ_i` over action profiles, stored row-major (player 0 slowest).
#[derive(Clone, Debug, PartialEq)]
pub struct NPlayerGame {
    actions: Vec<usize>,
    payoffs: Vec<Vec<f64>>,
}

impl NPlayerGame {
    pub fn new(actions: Vec<usize>, payoffs: Vec<Vec<f64>>) -> Result<Self> {
        if actions.is_empty() || actions.contains(&0) {
            return arg("every player needs at least one action");
        }
        check_dim(actions.len(), payoffs.len())?;
        let size: usize = actions.iter().product();
        for p in &payoffs {
            check_dim(size, p.len())?;
            if p.iter().any(|v| !v.is_finite()) {
                return arg("non-finite payoff");
            }
        }
        Ok(Self { actions, payoffs })
    }

    /// Two players with payoff matrices `ρ₁`, `ρ₂` over (row, column).
    pub fn bimatrix(r1: &ScalarGame, r2: &ScalarGame) -> Result<Self> {
        check_dim(r1.rows(), r2.rows())?;
        check_dim(r1.cols(), r2.cols())?;
        Self::new(vec![r1.rows(), r1.cols()], vec![r1.data().to_vec(), r2.data().to_vec()])
    }

    pub fn zero_sum(r: &ScalarGame) -> Result<Self> {
        let neg = ScalarGame::new(r.rows(), r.cols(), r.data().iter().map(|v| -v).collect())?;
        Self::bimatrix(r, &neg)
    }

    pub fn players(&self) -> usize {
        self.actions.len()
    }

    pub fn actions(&self, i: usize) -> usize {
        self.actions[i]
    }

    pub fn profiles(&self) -> usize {
        self.actions.iter().product()
    }

    pub fn index(&self, profile: &[usize]) -> usize {
        profile.iter().zip(&self.actions).fold(0, |acc, (a, n)| acc * n + a)
    }

    pub fn profile(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.players()];
        for i in (0..self.players()).rev() {
            out[i] = idx % self.actions[i];
            idx /= self.actions[i];
        }
        out
    }

    pub fn payoff(&self, i: usize, idx: usize) -> f64 {
        self.payoffs[i][idx]
    }

    /// Index of `profile` with player `i` switched to `a`.
    fn deviate(&self, profile: &[usize], i: usize, a: usize) -> usize {
        let mut p = profile.to_vec();
        p[i] = a;
        self.index(&p)
    }

    /// Index of the opponents' sub-profile of `profile` (players other than `i`, in order).
    pub fn others_index(&self, i: usize, profile: &[usize]) -> usize {
        (0..self.players()).filter(|&j| j != i).fold(0, |acc, j| acc * self.actions[j] + profile[j])
    }

    /// Player `i`'s outcome game: rows are its actions, columns the opponents' sub-profiles.
    pub fn outcome_game(&self, i: usize) -> Result<ScalarGame> {
        let cols = self.profiles() / self.actions[i];
        let mut data = vec![0.0; self.actions[i] * cols];
        for idx in 0..self.profiles() {
            let p = self.profile(idx);
            data[p[i] * cols + self.others_index(i, &p)] = self.payoffs[i][idx];
        }
        ScalarGame::new(self.actions[i], cols, data)
    }
}

/// A probability tensor over action profiles.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(game: &NPlayerGame, probs: Vec<f64>) -> Result<Self> {
        check_dim(game.profiles(), probs.len())?;
        MixedAction::new(probs.clone())?;
        Ok(Self { probs })
    }

    pub fn point_mass(game: &NPlayerGame, profile: &[usize]) -> Result<Self> {
        check_dim(game.players(), profile.len())?;
        if profile.iter().zip(&game.actions).any(|(a, n)| a >= n) {
            return arg("action out of range");
        }
        let mut probs = vec![0.0; game.profiles()];
        probs[game.index(profile)] = 1.0;
        Ok(Self { probs })
    }

    /// Product of independent mixed actions.
    pub fn product(game: &NPlayerGame, mixed: &[MixedAction]) -> Result<Self> {
        check_dim(game.players(), mixed.len())?;
        for (m, n) in mixed.iter().zip(&game.actions) {
            check_dim(*n, m.len())?;
        }
        let probs = (0..game.profiles())
            .map(|idx| game.profile(idx).iter().zip(mixed).map(|(a, m)| m.probs()[*a]).product())
            .collect();
        Ok(Self { probs })
    }

    pub fn from_counts(game: &NPlayerGame, counts: &[usize]) -> Result<Self> {
        check_dim(game.profiles(), counts.len())?;
        let total: usize = counts.iter().sum();
        if total == 0 {
            return arg("no stages recorded");
        }
        Ok(Self { probs: counts.iter().map(|&c| c as f64 / total as f64).collect() })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn marginal(&self, game: &NPlayerGame, i: usize) -> MixedAction {
        let mut m = vec![0.0; game.actions(i)];
        for (idx, q) in self.probs.iter().enumerate() {
            m[game.profile(idx)[i]] += q;
        }
        MixedAction::from_weights(&m).expect("marginal of a distribution")
    }
}

fn check_shapes(game: &NPlayerGame, q: &JointDistribution) -> Result<()> {
    check_dim(game.profiles(), q.probs.len())
}

/// `max_{a*} ρ_i(a*, q_{−i}) − ρ_i(q)` for each player.
pub fn hannan_violation(game: &NPlayerGame, q: &JointDistribution) -> Result<Vec<f64>> {
    check_shapes(game, q)?;
    Ok((0..game.players())
        .map(|i| {
            let mut dev = vec![0.0; game.actions(i)];
            let mut own = 0.0;
            for (idx, &w) in q.probs.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let p = game.profile(idx);
                own += w * game.payoff(i, idx);
                for (a, d) in dev.iter_mut().enumerate() {
                    *d += w * game.payoff(i, game.deviate(&p, i, a));
                }
            }
            dev.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v)) - own
        })
        .collect())
}

/// `max_{a,a'} Σ_{p: p_i = a} q(p)(ρ_i(a', p_{−i}) − ρ_i(p))` for each player.
pub fn correlated_violation(game: &NPlayerGame, q: &JointDistribution) -> Result<Vec<f64>> {
    check_shapes(game, q)?;
    Ok((0..game.players())
        .map(|i| {
            let na = game.actions(i);
            let mut gain = vec![vec![0.0; na]; na];
            for (idx, &w) in q.probs.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let p = game.profile(idx);
                let base = game.payoff(i, idx);
                for (b, g) in gain[p[i]].iter_mut().enumerate() {
                    *g += w * (game.payoff(i, game.deviate(&p, i, b)) - base);
                }
            }
            gain.iter().flatten().fold(0.0f64, |m, v| m.max(*v))
        })
        .collect())
}

/// Violations and average payoffs at one stage of self-play.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub stage: usize,
    pub hannan: Vec<f64>,
    pub correlated: Vec<f64>,
    pub average_payoff: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelfPlay {
    pub counts: Vec<usize>,
    pub joint: JointDistribution,
    /// One entry per power-of-two stage and at the final stage.
    pub checkpoints: Vec<Checkpoint>,
    /// Each player's realized regret statistics.
    pub regrets: Vec<RegretState>,
}

fn checkpoint(game: &NPlayerGame, counts: &[usize], stage: usize) -> Result<Checkpoint> {
    let q = JointDistribution::from_counts(game, counts)?;
    let average_payoff =
        (0..game.players()).map(|i| q.probs.iter().enumerate().map(|(idx, w)| w * game.payoff(i, idx)).sum()).collect();
    Ok(Checkpoint { stage, hannan: hannan_violation(game, &q)?, correlated: correlated_violation(game, &q)?, average_payoff })
}

/// Every player runs its own learner on its outcome vector `U_i(a) = ρ_i(a, p_{−i})`.
/// Players draw their actions in index order from one seeded stream.
pub fn selfplay(game: &NPlayerGame, algorithms: &[Algorithm], n: usize, seed: u64) -> Result<SelfPlay> {
    check_dim(game.players(), algorithms.len())?;
    if n == 0 {
        return arg("self-play needs at least one stage");
    }
    let mut learners = (0..game.players())
        .map(|i| Learner::new(game.outcome_game(i)?, algorithms[i].clone()))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0usize; game.profiles()];
    let mut checkpoints = Vec::new();
    for stage in 1..=n {
        let mut mixed = Vec::with_capacity(learners.len());
        let mut profile = Vec::with_capacity(learners.len());
        for l in &learners {
            let x = l.current()?;
            profile.push(x.sample(rng.gen::<f64>()));
            mixed.push(x);
        }
        for (i, l) in learners.iter_mut().enumerate() {
            l.observe_stage(&mixed[i], Some(profile[i]), game.others_index(i, &profile))?;
        }
        counts[game.index(&profile)] += 1;
        if stage.is_power_of_two() || stage == n {
            checkpoints.push(checkpoint(game, &counts, stage)?);
        }
    }
    Ok(SelfPlay {
        joint: JointDistribution::from_counts(game, &counts)?,
        counts,
        checkpoints,
        regrets: learners.iter().map(|l| l.state().clone()).collect(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroSumOptimality {
    pub value: f64,
    /// `(value − min_b ρ(x̄, b), max_a ρ(a, ȳ) − value)` for the empirical marginals.
    pub exploitability: (f64, f64),
    /// `(stage, |ρ̄ − v|)` at each checkpoint.
    pub value_gap: Vec<(usize, f64)>,
}

/// Distance of self-play in a two-player zero-sum game to optimal play.
pub fn zerosum_optimality(game: &NPlayerGame, play: &SelfPlay) -> Result<ZeroSumOptimality> {
    if game.players() != 2 {
        return arg("zero-sum optimality needs two players");
    }
    if (0..game.profiles()).any(|k| (game.payoff(0, k) + game.payoff(1, k)).abs() > 1e-12) {
        return arg("the game is not zero-sum");
    }
    let rho = game.outcome_game(0)?;
    let value = solve(&rho, 1e-12)?.value;
    let x = play.joint.marginal(game, 0);
    let y = play.joint.marginal(game, 1);
    let exploitability = exploitability(&rho, &x, &y)?;
    let value_gap = play.checkpoints.iter().map(|c| (c.stage, (c.average_payoff[0] - value).abs())).collect();
    Ok(ZeroSumOptimality { value, exploitability, value_gap })
}

/// Settings for the calibrated best response on `B = [0,1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BestResponseConfig {
    pub eps: f64,
    /// Modulus of continuity of `G` for `ε/2`, declared by the caller.
    pub delta: f64,
    /// Finite candidate set standing in for the player's action set.
    pub actions: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BestResponseRun {
    pub grid: Vec<f64>,
    /// Best response `a[ℓ]` to each grid point.
    pub responses: Vec<f64>,
    pub cells: Vec<usize>,
    pub nature: Vec<f64>,
    /// `(stage, sup_ℓ (N[ℓ]/n)(sup_a G(a, b̄[ℓ]) − G(a[ℓ], b̄[ℓ]) − ε))` at powers of two and the end.
    pub internal: Vec<(usize, f64)>,
    /// `sup_a G(a, b̄_n) − G(ā_n, b̄_n)` at the end.
    pub external: f64,
}

/// Calibrated forecasting of Nature's `b ∈ [0,1]` on a `δ/2`-grid, answered by the
/// precomputed best response of the predicted cell.
pub fn calibrated_best_response(
    g: &dyn Fn(f64, f64) -> f64,
    cfg: &BestResponseConfig,
    nature: &mut dyn FnMut(&[f64]) -> f64,
    n: usize,
    seed: u64,
) -> Result<BestResponseRun> {
    if !(cfg.delta > 0.0 && cfg.delta <= 1.0) || !(cfg.eps > 0.0) {
        return arg("need ε > 0 and 0 < δ ≤ 1");
    }
    if cfg.actions.is_empty() {
        return arg("empty action set");
    }
    let k = (1.0 / cfg.delta - 1e-12).ceil() as usize;
    let grid: Vec<f64> = (0..=k).map(|i| i as f64 / k as f64).collect();
    let points: Vec<Vec<f64>> = grid.iter().map(|b| vec![*b]).collect();
    let best = |b: f64| cfg.actions.iter().map(|&a| g(a, b)).fold(f64::NEG_INFINITY, f64::max);
    let responses: Vec<f64> = grid
        .iter()
        .map(|&b| {
            let top = best(b);
            *cfg.actions.iter().find(|&&a| g(a, b) >= top).expect("nonempty")
        })
        .collect();
    let nu = vec![0.0; grid.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0usize; grid.len()];
    let mut sums = vec![vec![0.0]; grid.len()];
    let (mut cells, mut bs) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut internal = Vec::new();
    for stage in 1..=n {
        let r = regret_from_sums(&counts, &sums, &points, &nu, stage - 1);
        let lambda = invariant_step(&positive_matrix(&r))?;
        let cell = lambda.sample(rng.gen::<f64>());
        let b = nature(&bs);
        if !(0.0..=1.0).contains(&b) {
            return Err(Error::Protocol { stage, msg: format!("Nature played {b} outside [0,1]") });
        }
        counts[cell] += 1;
        sums[cell][0] += b;
        cells.push(cell);
        bs.push(b);
        if stage.is_power_of_two() || stage == n {
            let score = (0..grid.len())
                .filter(|&l| counts[l] > 0)
                .map(|l| {
                    let bbar = sums[l][0] / counts[l] as f64;
                    counts[l] as f64 / stage as f64 * (best(bbar) - g(responses[l], bbar) - cfg.eps)
                })
                .fold(f64::NEG_INFINITY, f64::max);
            internal.push((stage, score));
        }
    }
    let external = if n == 0 {
        0.0
    } else {
        let bbar = bs.iter().sum::<f64>() / n as f64;
        let abar = cells.iter().map(|&c| responses[c]).sum::<f64>() / n as f64;
        best(bbar) - g(abar, bbar)
    };
    Ok(BestResponseRun { grid, responses, cells, nature: bs, internal, external })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pennies() -> NPlayerGame {
        NPlayerGame::zero_sum(&ScalarGame::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap()).unwrap()
    }

    #[test]
    fn hannan_examples() {
        let g = pennies();
        let q = JointDistribution::new(&g, vec![0.25; 4]).unwrap();
        assert!(hannan_violation(&g, &q).unwrap().iter().all(|v| v.abs() < 1e-12));

        let single = NPlayerGame::new(vec![1, 1], vec![vec![3.0], vec![-1.0]]).unwrap();
        let q = JointDistribution::point_mass(&single, &[0, 0]).unwrap();
        assert_eq!(hannan_violation(&single, &q).unwrap(), vec![0.0, 0.0]);

        let r1 = ScalarGame::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let g = NPlayerGame::bimatrix(&r1, &r1).unwrap();
        let q = JointDistribution::point_mass(&g, &[1, 0]).unwrap();
        assert_eq!(hannan_violation(&g, &q).unwrap()[0], 1.0);
    }

    #[test]
    fn correlated_examples() {
        let r1 = ScalarGame::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let r2 = ScalarGame::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let bos = NPlayerGame::bimatrix(&r1, &r2).unwrap();
        let nash = [MixedAction::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap(), MixedAction::new(vec![1.0 / 3.0, 2.0 / 3.0]).unwrap()];
        let q = JointDistribution::product(&bos, &nash).unwrap();
        assert!(correlated_violation(&bos, &q).unwrap().iter().all(|v| *v <= 1e-9));

        let pd1 = ScalarGame::from_rows(&[vec![3.0, 0.0], vec![5.0, 1.0]]).unwrap();
        let pd2 = ScalarGame::from_rows(&[vec![3.0, 5.0], vec![0.0, 1.0]]).unwrap();
        let pd = NPlayerGame::bimatrix(&pd1, &pd2).unwrap();
        let q = JointDistribution::point_mass(&pd, &[0, 0]).unwrap();
        assert_eq!(correlated_violation(&pd, &q).unwrap()[0], 2.0);
    }

    #[test]
    fn single_action_selfplay() {
        let g = NPlayerGame::new(vec![1, 1], vec![vec![1.0], vec![2.0]]).unwrap();
        let p = selfplay(&g, &[Algorithm::RegretMatching, Algorithm::Internal], 10, 0).unwrap();
        assert_eq!(p.joint.probs(), &[1.0]);
        assert!(p.checkpoints.iter().all(|c| c.hannan == vec![0.0, 0.0] && c.correlated == vec![0.0, 0.0]));
    }

    #[test]
    fn constant_game_has_no_value_gap() {
        let g = NPlayerGame::zero_sum(&ScalarGame::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap()).unwrap();
        let p = selfplay(&g, &[Algorithm::RegretMatching, Algorithm::RegretMatching], 64, 1).unwrap();
        let z = zerosum_optimality(&g, &p).unwrap();
        assert!(z.value_gap.iter().all(|(_, v)| *v == 0.0));
        assert!(zerosum_optimality(&NPlayerGame::bimatrix(&g.outcome_game(0).unwrap(), &ScalarGame::new(2, 2, vec![1.0; 4]).unwrap()).unwrap(), &p).is_err());
    }
}
