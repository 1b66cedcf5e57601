//! Approachability strategies and diagnostics.

use crate::engine::{
    run_episode, Activation, Episode, HistoryView, Mode, Nature, StageWeights, Strategy, VectorGame,
};
use crate::error::{arg, check_dim, Error, Result};
use crate::geometry::{
    compositions, dot, norm, project_onto_hull, ConvexTarget, MixedAction, Projection, Ratio,
};
use crate::zerosum::{solve, ScalarGame};

const INSIDE_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct ApproachConfig {
    pub game: VectorGame,
    pub target: ConvexTarget,
    pub fallback: MixedAction,
    /// Project onto `E ∩ co{g(a,b)}` instead of `E`.
    pub restrict_to_hull: bool,
}

impl ApproachConfig {
    pub fn new(game: VectorGame, target: ConvexTarget) -> Result<Self> {
        check_dim(game.dim(), target.dim())?;
        let fallback = MixedAction::uniform(game.rows());
        Ok(Self { game, target, fallback, restrict_to_hull: false })
    }

    pub fn restricted(mut self) -> Self {
        self.restrict_to_hull = true;
        self
    }

    pub fn with_fallback(mut self, fallback: MixedAction) -> Result<Self> {
        check_dim(self.game.rows(), fallback.len())?;
        self.fallback = fallback;
        Ok(self)
    }

    /// Projection onto the working target (`E` or `E_g`).
    pub fn project(&self, z: &[f64]) -> Result<Projection> {
        if self.restrict_to_hull {
            project_restricted(&self.game, &self.target, z)
        } else {
            self.target.project(z)
        }
    }
}

fn payoff_points(game: &VectorGame) -> Vec<Vec<f64>> {
    let mut pts = Vec::with_capacity(game.rows() * game.cols());
    for a in 0..game.rows() {
        for b in 0..game.cols() {
            pts.push(game.payoff(a, b).to_vec());
        }
    }
    pts
}

/// Projection onto `E_g = E ∩ co{g}`: `Π_E(z)` when it already lies in the hull,
/// Dykstra's alternating projections between `E` and the hull otherwise.
pub fn project_restricted(game: &VectorGame, target: &ConvexTarget, z: &[f64]) -> Result<Projection> {
    let pts = payoff_points(game);
    let on_e = target.project(z)?;
    let (h, _) = project_onto_hull(&pts, &on_e.pi)?;
    if crate::geometry::dist(&h, &on_e.pi) <= 1e-12 {
        return Ok(on_e);
    }
    let d = z.len();
    let mut x = z.to_vec();
    let mut p = vec![0.0; d];
    let mut q = vec![0.0; d];
    for _ in 0..20_000 {
        let xp: Vec<f64> = (0..d).map(|k| x[k] + p[k]).collect();
        let y = target.project(&xp)?.pi;
        for k in 0..d {
            p[k] = xp[k] - y[k];
        }
        let yq: Vec<f64> = (0..d).map(|k| y[k] + q[k]).collect();
        let (nx, _) = project_onto_hull(&pts, &yq)?;
        for k in 0..d {
            q[k] = yq[k] - nx[k];
        }
        let change = crate::geometry::dist(&nx, &x);
        x = nx;
        if change <= 1e-11 && target.distance(&x)? <= 1e-9 {
            let dist = crate::geometry::dist(z, &x);
            return Ok(Projection { pi: x, dist });
        }
    }
    Err(Error::Numerical { what: "projection onto target ∩ hull", residual: target.distance(&x)? })
}

/// Upper bound on `‖E_g‖`: never below the true value.
pub fn eg_norm_bound(game: &VectorGame, target: &ConvexTarget) -> f64 {
    let hull = game.norm();
    let own = match target {
        ConvexTarget::Ball(b) => norm(b.center()) + b.radius(),
        ConvexTarget::Box(b) => b
            .lower()
            .iter()
            .zip(b.upper())
            .map(|(l, u)| l.abs().max(u.abs()).powi(2))
            .sum::<f64>()
            .sqrt(),
        _ => f64::INFINITY,
    };
    hull.min(own)
}

/// `κ = (‖g‖∞ + ‖E_g‖)²`, using [`eg_norm_bound`].
pub fn kappa(game: &VectorGame, target: &ConvexTarget) -> f64 {
    (game.norm() + eg_norm_bound(game, target)).powi(2)
}

/// Blackwell's step: fallback inside the target, otherwise an optimal action
/// of the projected game `⟨g(a,b) − π, avg − π⟩` that the player minimizes.
pub fn blackwell_step(cfg: &ApproachConfig, avg: &[f64]) -> Result<MixedAction> {
    check_dim(cfg.game.dim(), avg.len())?;
    let pr = cfg.project(avg)?;
    if pr.dist <= INSIDE_TOL {
        return Ok(cfg.fallback.clone());
    }
    let normal: Vec<f64> = avg.iter().zip(&pr.pi).map(|(a, p)| a - p).collect();
    let (na, nb) = (cfg.game.rows(), cfg.game.cols());
    let mut data = Vec::with_capacity(na * nb);
    for a in 0..na {
        for b in 0..nb {
            let g = cfg.game.payoff(a, b);
            let s: f64 = g.iter().zip(&pr.pi).zip(&normal).map(|((g, p), n)| (g - p) * n).sum();
            data.push(-s);
        }
    }
    Ok(solve(&ScalarGame::new(na, nb, data)?, 1e-9)?.x)
}

/// Blackwell's strategy as an engine player; stage 1 plays the fallback.
pub struct Blackwell {
    pub cfg: ApproachConfig,
}

impl Strategy for Blackwell {
    fn next(&mut self, view: &HistoryView<'_>) -> Result<MixedAction> {
        if view.stage == 0 {
            return Ok(self.cfg.fallback.clone());
        }
        blackwell_step(&self.cfg, view.average)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Approachability {
    pub delta_hat: f64,
    pub witness_y: MixedAction,
    /// Lipschitz bound on what the grid can miss: the true δ is at most `delta_hat + slack`.
    pub slack: f64,
}

impl Approachability {
    pub fn numerically_approachable(&self) -> bool {
        self.delta_hat <= 1e-6
    }
}

/// `max_y min_x d(g(x,y), C)` over the resolution grid of Δ(B).
pub fn check_approachable(game: &VectorGame, target: &ConvexTarget, resolution: usize) -> Result<Approachability> {
    check_dim(game.dim(), target.dim())?;
    if game.cols() > 4 {
        return Err(Error::Unsupported(format!("grid over Δ(B) with B = {} > 4", game.cols())));
    }
    if resolution < 2 {
        return arg("resolution must be at least 2");
    }
    let mut best = (f64::NEG_INFINITY, MixedAction::uniform(game.cols()));
    for c in compositions(game.cols(), resolution) {
        let y: Vec<f64> = c.iter().map(|&k| k as f64 / resolution as f64).collect();
        let v = min_distance_over_x(game, target, &y)?;
        if v > best.0 {
            best = (v, MixedAction::from_weights(&y)?);
        }
    }
    let slack = grid_slack(game, resolution);
    Ok(Approachability { delta_hat: best.0.max(0.0), witness_y: best.1, slack })
}

/// How far a resolution-`resolution` grid over Δ(B) can understate `max_y min_x d_C(g(x,y))`.
pub fn grid_slack(game: &VectorGame, resolution: usize) -> f64 {
    let mut spread = 0.0f64;
    for a in 0..game.rows() {
        for b in 0..game.cols() {
            for b2 in 0..game.cols() {
                spread = spread.max(crate::geometry::dist(game.payoff(a, b), game.payoff(a, b2)));
            }
        }
    }
    spread * game.cols() as f64 / resolution as f64 / 2.0
}

/// `min_{x ∈ Δ(A)} d_C(g(x,y))` by accelerated projected gradient on `½ d_C²`,
/// stopped on a Frank–Wolfe duality-gap certificate.
pub fn min_distance_over_x(game: &VectorGame, target: &ConvexTarget, y: &[f64]) -> Result<f64> {
    let (na, d) = (game.rows(), game.dim());
    let g: Vec<Vec<f64>> = (0..na)
        .map(|a| {
            let mut v = vec![0.0; d];
            for (b, q) in y.iter().enumerate() {
                for (o, p) in v.iter_mut().zip(game.payoff(a, b)) {
                    *o += q * p;
                }
            }
            v
        })
        .collect();
    let lip = g.iter().map(|v| dot(v, v)).sum::<f64>().max(1e-12);
    let eval = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        let mut z = vec![0.0; d];
        for (xa, ga) in x.iter().zip(&g) {
            for (o, p) in z.iter_mut().zip(ga) {
                *o += xa * p;
            }
        }
        let pr = target.project(&z)?;
        let r: Vec<f64> = z.iter().zip(&pr.pi).map(|(a, b)| a - b).collect();
        let grad: Vec<f64> = g.iter().map(|ga| dot(ga, &r)).collect();
        Ok((pr.dist, grad))
    };
    let mut x = vec![1.0 / na as f64; na];
    for a in 0..na {
        let (dv, _) = eval(&unit(na, a))?;
        if dv <= 1e-12 {
            return Ok(dv);
        }
    }
    let mut yk = x.clone();
    let mut tk = 1.0f64;
    let mut prev_f = f64::INFINITY;
    let mut best = f64::INFINITY;
    for _ in 0..200_000 {
        let (dv, grad) = eval(&x)?;
        best = best.min(dv);
        let f = 0.5 * dv * dv;
        let gap = dot(&grad, &x) - grad.iter().fold(f64::INFINITY, |m, v| m.min(*v));
        let lower = (2.0 * (f - gap).max(0.0)).sqrt();
        if dv <= 1e-9 || dv - lower <= 1e-8 {
            return Ok(best.min(dv));
        }
        if f > prev_f {
            yk = x.clone();
            tk = 1.0;
        }
        prev_f = f;
        let (_, gy) = eval(&yk)?;
        let stepped: Vec<f64> = yk.iter().zip(&gy).map(|(v, gr)| v - gr / lip).collect();
        let nx = crate::geometry::simplex_project(&stepped)?.into_vec();
        let tn = (1.0 + (1.0 + 4.0 * tk * tk).sqrt()) / 2.0;
        yk = nx.iter().zip(&x).map(|(a, b)| a + (tk - 1.0) / tn * (a - b)).collect();
        x = nx;
        tk = tn;
    }
    Err(Error::Numerical { what: "inner minimization over Δ(A)", residual: best })
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// Softmax weights and schedule of the potential-based ℓ∞ strategy.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialState {
    pub sum: Vec<f64>,
    pub block: u32,
    pub eta: f64,
    pub pos: usize,
}

/// `η = √(ln D / N)` for `D` orthant coordinates and block length `N`.
pub fn potential_eta(coords: usize, block_len: usize) -> f64 {
    ((coords as f64).ln() / block_len as f64).sqrt()
}

impl PotentialState {
    pub fn new(coords: usize) -> Self {
        Self { sum: vec![0.0; coords], block: 0, eta: potential_eta(coords, 1), pos: 0 }
    }

    pub fn weights(&self) -> MixedAction {
        crate::regret::softmax(&self.sum, self.eta)
    }

    /// Adds one transformed payoff, restarting at block ends.
    pub fn advance(&mut self, h: &[f64]) {
        for (s, v) in self.sum.iter_mut().zip(h) {
            *s += v;
        }
        self.pos += 1;
        if self.pos == 1usize << self.block {
            self.block += 1;
            self.pos = 0;
            self.sum.iter_mut().for_each(|s| *s = 0.0);
            self.eta = potential_eta(self.sum.len(), 1usize << self.block);
        }
    }
}

/// `h(a,b) = (g − upper, lower − g)`: the box becomes the nonpositive orthant in `R^{2d}`.
pub fn box_to_orthant(game: &VectorGame, target: &ConvexTarget) -> Result<VectorGame> {
    let ConvexTarget::Box(b) = target else {
        return Err(Error::Unsupported("potential ℓ∞ strategy needs a box target".into()));
    };
    check_dim(game.dim(), b.lower().len())?;
    if b.lower().iter().chain(b.upper()).any(|v| !v.is_finite()) {
        return Err(Error::Unsupported("potential ℓ∞ strategy needs a bounded box".into()));
    }
    let d = game.dim();
    VectorGame::from_fn(game.rows(), game.cols(), 2 * d, |a, bb| {
        let g = game.payoff(a, bb);
        let mut h: Vec<f64> = (0..d).map(|k| g[k] - b.upper()[k]).collect();
        h.extend((0..d).map(|k| b.lower()[k] - g[k]));
        h
    })
}

/// Optimal action of `⟨w, h(a,b)⟩` (minimized) for `w = softmax(η G)`.
pub fn potential_linf_step(state: &PotentialState, transformed: &VectorGame) -> Result<MixedAction> {
    check_dim(transformed.dim(), state.sum.len())?;
    let w = state.weights();
    let (na, nb) = (transformed.rows(), transformed.cols());
    let mut data = Vec::with_capacity(na * nb);
    for a in 0..na {
        for b in 0..nb {
            data.push(-dot(w.probs(), transformed.payoff(a, b)));
        }
    }
    Ok(solve(&ScalarGame::new(na, nb, data)?, 1e-9)?.x)
}

/// The potential-based ℓ∞ approachability strategy with doubling restarts.
pub struct PotentialLinf {
    transformed: VectorGame,
    state: PotentialState,
}

impl PotentialLinf {
    pub fn new(game: &VectorGame, target: &ConvexTarget) -> Result<Self> {
        let transformed = box_to_orthant(game, target)?;
        let state = PotentialState::new(transformed.dim());
        Ok(Self { transformed, state })
    }

    pub fn state(&self) -> &PotentialState {
        &self.state
    }
}

impl Strategy for PotentialLinf {
    fn next(&mut self, view: &HistoryView<'_>) -> Result<MixedAction> {
        if let Some(last) = view.last {
            let h = match last.player_action {
                Some(a) => self.transformed.payoff(a, last.nature_action).to_vec(),
                None => self.transformed.payoff_xb(&last.player_mixed, last.nature_action),
            };
            self.state.advance(&h);
        }
        potential_linf_step(&self.state, &self.transformed)
    }

    fn reset(&mut self) {
        self.state = PotentialState::new(self.transformed.dim());
    }
}

/// Lift for weighted durations: payoff `(ω g, ω)`, target `{(z, w) : w ∈ [ω_low, ω_high], z/w ∈ E}`.
pub fn lift_weighted(
    game: &VectorGame,
    weights: &StageWeights,
    target: &ConvexTarget,
) -> Result<(VectorGame, ConvexTarget)> {
    check_dim(game.dim(), target.dim())?;
    let lifted = VectorGame::from_fn(game.rows(), game.cols(), game.dim() + 1, |a, b| {
        let w = weights.get(a, b);
        let mut v: Vec<f64> = game.payoff(a, b).iter().map(|g| w * g).collect();
        v.push(w);
        v
    })?;
    let t = ConvexTarget::cone_lift(target.clone(), Ratio::Shared { low: weights.low(), high: weights.high() })?;
    Ok((lifted, t))
}

/// Lift for activations: payoff `(χ^k g^k, χ)`, target the product of planar cones.
pub fn lift_activation(
    game: &VectorGame,
    activation: &Activation,
    target: &ConvexTarget,
) -> Result<(VectorGame, ConvexTarget)> {
    check_dim(game.dim(), target.dim())?;
    check_dim(game.dim(), activation.dim())?;
    let d = game.dim();
    let lifted = VectorGame::from_fn(game.rows(), game.cols(), 2 * d, |a, b| {
        let chi = activation.get(a, b);
        let mut v: Vec<f64> = (0..d).map(|k| if chi[k] { game.payoff(a, b)[k] } else { 0.0 }).collect();
        v.extend(chi.iter().map(|c| if *c { 1.0 } else { 0.0 }));
        v
    })?;
    let t = ConvexTarget::cone_lift(target.clone(), Ratio::PerCoordinate)?;
    Ok((lifted, t))
}

/// Ratio average `z / w` of a weighted-lift average.
pub fn unlift_weighted(avg: &[f64]) -> Vec<f64> {
    let (z, w) = avg.split_at(avg.len() - 1);
    z.iter().map(|v| v / w[0]).collect()
}

/// Per-coordinate ratios `z^k / w^k` with `0/0 = 0`.
pub fn unlift_activation(avg: &[f64]) -> Vec<f64> {
    let d = avg.len() / 2;
    (0..d).map(|k| if avg[d + k] == 0.0 { 0.0 } else { avg[k] / avg[d + k] }).collect()
}

/// The game with rows T, B and columns L, R: `T: (1,0), (1,1)`, `B: (0,0), (0,0)`.
pub fn weak_game() -> VectorGame {
    VectorGame::new(2, 2, 2, vec![1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]).expect("static game")
}

/// Distance to `{(1/2, y) : y ∈ [0, 1/4]} ∪ {(1, y) : y ∈ [1/4, 1]}`.
pub fn weak_target_distance(z: &[f64]) -> Result<f64> {
    let left = ConvexTarget::boxed(vec![0.5, 0.0], vec![0.5, 0.25])?;
    let right = ConvexTarget::boxed(vec![1.0, 0.25], vec![1.0, 1.0])?;
    Ok(left.distance(z)?.min(right.distance(z)?))
}

/// T for `N` stages, then T forever if Nature chose R more than half the time, B otherwise.
pub struct TwoPhase {
    horizon: usize,
    choice: Option<usize>,
}

impl TwoPhase {
    pub fn new(horizon: usize) -> Self {
        Self { horizon, choice: None }
    }
}

impl Strategy for TwoPhase {
    fn next(&mut self, view: &HistoryView<'_>) -> Result<MixedAction> {
        if view.stage < self.horizon {
            return Ok(MixedAction::pure(2, 0));
        }
        let horizon = self.horizon;
        let a = *self.choice.get_or_insert_with(|| if 2 * view.nature_counts[1] > horizon { 0 } else { 1 });
        Ok(MixedAction::pure(2, a))
    }

    fn reset(&mut self) {
        self.choice = None;
    }
}

/// Plays the two-phase strategy for `2N` stages; returns the terminal distance to the union.
pub fn weak_approach_demo(horizon: usize, nature: &mut dyn Nature, seed: u64) -> Result<f64> {
    if horizon < 2 || horizon % 2 == 1 {
        return arg(format!("horizon must be even and at least 2, got {horizon}"));
    }
    let game = weak_game();
    let t = run_episode(&Episode::new(&game, 2 * horizon, seed, Mode::Sampled), &mut TwoPhase::new(horizon), nature)?;
    weak_target_distance(&t.final_average(crate::engine::Averaging::Cesaro))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{FixedNature, ScriptedNature};
    use crate::regret::regret_game;

    #[test]
    fn inside_target_plays_fallback() {
        let g = VectorGame::new(2, 1, 1, vec![-1.0, 1.0]).unwrap();
        let cfg = ApproachConfig::new(g, ConvexTarget::singleton(vec![0.0]).unwrap())
            .unwrap()
            .with_fallback(MixedAction::pure(2, 1))
            .unwrap();
        assert_eq!(blackwell_step(&cfg, &[0.0]).unwrap(), MixedAction::pure(2, 1));
        assert_eq!(blackwell_step(&cfg, &[0.5]).unwrap(), MixedAction::pure(2, 0));
    }

    #[test]
    fn orthant_step_is_regret_matching() {
        let rho = ScalarGame::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let cfg = ApproachConfig::new(regret_game(&rho).unwrap(), ConvexTarget::nonpositive_orthant(3).unwrap()).unwrap();
        let x = blackwell_step(&cfg, &[0.2, -0.1, 0.3]).unwrap();
        assert!(x.probs().iter().zip([0.4, 0.0, 0.6]).all(|(a, b)| (a - b).abs() < 1e-9));
    }

    #[test]
    fn potential_weights_and_eta() {
        let mut s = PotentialState::new(2);
        assert_eq!(s.weights(), MixedAction::uniform(2));
        s.sum = vec![0.0, 10.0];
        s.eta = 1.0;
        let w = s.weights();
        assert!((w.probs()[0] - 4.539_786_9e-5).abs() < 1e-10);
        assert!((potential_eta(4, 100) - 0.117_741).abs() < 1e-6);
    }

    #[test]
    fn weak_demo_scripted_natures() {
        for n in [10, 100] {
            assert_eq!(weak_approach_demo(n, &mut FixedNature(0), 0).unwrap(), 0.0);
            assert_eq!(weak_approach_demo(n, &mut FixedNature(1), 0).unwrap(), 0.0);
            assert!(weak_approach_demo(n, &mut ScriptedNature(vec![0, 1, 1]), 0).unwrap() <= 1.0 / n as f64);
        }
        assert!(weak_approach_demo(7, &mut FixedNature(0), 0).is_err());
    }

    #[test]
    fn radius_beyond_payoffs_is_approachable() {
        let g = weak_game();
        let r = check_approachable(&g, &ConvexTarget::ball(vec![0.0, 0.0], 2.0).unwrap(), 8).unwrap();
        assert_eq!(r.delta_hat, 0.0);
    }
}
