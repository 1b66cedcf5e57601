//! External, internal and Φ-regret: statistics, learners and lifts.
//!
//! Outcomes are scalar games `ρ(a,b)` that the player maximizes; at each stage
//! the learner sees the outcome vector `U = ρ(·, b_m)`.

use crate::error::{arg, check_dim, Error, Result};
use crate::engine::{HistoryView, Nature, NatureMove, Strategy, VectorGame};
use crate::geometry::{simplex_project, ConvexTarget, MixedAction};
use crate::invariant::{invariant_measure, stationary};
use crate::zerosum::{solve, ScalarGame};

/// A finite family of maps `φ: A → A`.
#[derive(Clone, Debug, PartialEq)]
pub struct SwapFamily {
    actions: usize,
    maps: Vec<Vec<usize>>,
}

impl SwapFamily {
    pub fn new(actions: usize, maps: Vec<Vec<usize>>) -> Result<Self> {
        if actions == 0 || maps.is_empty() {
            return arg("swap family needs A ≥ 1 and at least one map");
        }
        for phi in &maps {
            check_dim(actions, phi.len())?;
            if phi.iter().any(|&a| a >= actions) {
                return arg(format!("map {phi:?} leaves the action set"));
            }
        }
        Ok(Self { actions, maps })
    }

    /// Constant maps `a ↦ a*`, one per `a*`.
    pub fn external(actions: usize) -> Self {
        Self { actions, maps: (0..actions).map(|t| vec![t; actions]).collect() }
    }

    /// `φ_{a',a*}` sends `a'` to `a*` and fixes the rest; ordered pairs with `a' ≠ a*`,
    /// listed row-major.
    pub fn internal(actions: usize) -> Self {
        let mut maps = Vec::new();
        for from in 0..actions {
            for to in 0..actions {
                if from != to {
                    let mut phi: Vec<usize> = (0..actions).collect();
                    phi[from] = to;
                    maps.push(phi);
                }
            }
        }
        if maps.is_empty() {
            maps.push(vec![0]);
        }
        Self { actions, maps }
    }

    pub fn identity(actions: usize) -> Self {
        Self { actions, maps: vec![(0..actions).collect()] }
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn map(&self, i: usize) -> &[usize] {
        &self.maps[i]
    }

    /// `A_Φ = max_a |{φ : φ(a) ≠ a}|`.
    pub fn a_phi(&self) -> usize {
        (0..self.actions)
            .map(|a| self.maps.iter().filter(|phi| phi[a] != a).count())
            .max()
            .unwrap_or(0)
    }

    /// `(H_Φ R)^φ = Σ_a R^{a, φ(a)}`.
    pub fn apply_h(&self, internal: &[Vec<f64>]) -> Vec<f64> {
        self.maps
            .iter()
            .map(|phi| (0..self.actions).map(|a| internal[a][phi[a]]).sum())
            .collect()
    }
}

/// Cumulative regrets; averages divide by `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretState {
    actions: usize,
    family: SwapFamily,
    r_sum: Vec<f64>,
    internal_sum: Vec<f64>,
    phi_sum: Vec<f64>,
    n: usize,
}

impl RegretState {
    pub fn new(actions: usize, family: SwapFamily) -> Result<Self> {
        check_dim(actions, family.actions)?;
        Ok(Self {
            actions,
            r_sum: vec![0.0; actions],
            internal_sum: vec![0.0; actions * actions],
            phi_sum: vec![0.0; family.len()],
            family,
            n: 0,
        })
    }

    pub fn stages(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> &SwapFamily {
        &self.family
    }

    fn scale(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            1.0 / self.n as f64
        }
    }

    pub fn external_avg(&self) -> Vec<f64> {
        let s = self.scale();
        self.r_sum.iter().map(|v| v * s).collect()
    }

    /// Row `a` is the regret accumulated on stages where `a` was played.
    pub fn internal_avg(&self) -> Vec<Vec<f64>> {
        let s = self.scale();
        self.internal_sum.chunks(self.actions).map(|r| r.iter().map(|v| v * s).collect()).collect()
    }

    pub fn phi_avg(&self) -> Vec<f64> {
        let s = self.scale();
        self.phi_sum.iter().map(|v| v * s).collect()
    }

    pub fn update(&mut self, a: usize, u: &[f64]) -> Result<()> {
        if a >= self.actions {
            return arg(format!("action {a} out of range"));
        }
        self.update_mixed(&MixedAction::pure(self.actions, a), u)
    }

    /// Expected increments under `x`; equals [`RegretState::update`] for pure `x`.
    pub fn update_mixed(&mut self, x: &MixedAction, u: &[f64]) -> Result<()> {
        let na = self.actions;
        check_dim(na, u.len())?;
        check_dim(na, x.len())?;
        if u.iter().any(|v| !v.is_finite()) {
            return arg("non-finite outcome");
        }
        let xp = x.probs();
        for a in 0..na {
            if xp[a] == 0.0 {
                continue;
            }
            for k in 0..na {
                let r = u[k] - u[a];
                self.r_sum[k] += xp[a] * r;
                self.internal_sum[a * na + k] += xp[a] * r;
            }
            for (s, phi) in self.phi_sum.iter_mut().zip(&self.family.maps) {
                *s += xp[a] * (u[phi[a]] - u[a]);
            }
        }
        self.n += 1;
        Ok(())
    }
}

pub fn update_regret(state: &mut RegretState, a: usize, u: &[f64]) -> Result<()> {
    state.update(a, u)
}

pub fn positive_part(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.max(0.0)).collect()
}

pub fn positive_matrix(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    m.iter().map(|r| positive_part(r)).collect()
}

pub fn norm2_pos(v: &[f64]) -> f64 {
    v.iter().map(|x| x.max(0.0).powi(2)).sum::<f64>().sqrt()
}

pub fn norm_inf_pos(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(*x))
}

/// `x ∝ r̄⁺`, uniform when no component is positive.
pub fn regret_matching_step(avg_regret: &[f64]) -> Result<MixedAction> {
    MixedAction::from_weights(&positive_part(avg_regret))
}

/// Learning rate `η_n = √(8 n ln A)` for averaged outcomes.
pub fn exp_weights_eta(n: usize, actions: usize) -> f64 {
    (8.0 * n as f64 * (actions as f64).ln()).sqrt()
}

pub fn softmax(scores: &[f64], eta: f64) -> MixedAction {
    let mx = scores.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
    let w: Vec<f64> = scores.iter().map(|s| (eta * (s - mx)).exp()).collect();
    MixedAction::from_weights(&w).expect("softmax weights are positive")
}

pub fn exp_weights_step(avg_outcome: &[f64], n: usize) -> Result<MixedAction> {
    if n == 0 {
        return arg("exponential weights needs n ≥ 1");
    }
    Ok(softmax(avg_outcome, exp_weights_eta(n, avg_outcome.len())))
}

pub fn ogd_step(x: &MixedAction, u: &[f64], eta: f64) -> Result<MixedAction> {
    check_dim(x.len(), u.len())?;
    if !(eta >= 0.0) {
        return arg("step size must be nonnegative");
    }
    let v: Vec<f64> = x.probs().iter().zip(u).map(|(p, g)| p + eta * g).collect();
    simplex_project(&v)
}

/// `Θ(M)^{a,a'} = Σ_{φ: φ(a)=a'} M^φ`.
pub fn theta_matrix(m: &[f64], family: &SwapFamily) -> Result<Vec<Vec<f64>>> {
    check_dim(family.len(), m.len())?;
    if m.iter().any(|v| !(*v >= 0.0)) {
        return arg("Θ needs a nonnegative vector");
    }
    let na = family.actions;
    let mut out = vec![vec![0.0; na]; na];
    for (phi, w) in family.maps.iter().zip(m) {
        for a in 0..na {
            out[a][phi[a]] += w;
        }
    }
    Ok(out)
}

pub fn invariant_step(m: &[Vec<f64>]) -> Result<MixedAction> {
    invariant_measure(m)
}

/// Fixed point of `p ↦ Σ_φ θ^φ p∘φ⁻¹`: the stationary law of the chain `Θ(θ)`.
pub fn ext_to_phi_step(theta: &MixedAction, family: &SwapFamily) -> Result<MixedAction> {
    stationary(&theta_matrix(theta.probs(), family)?)
}

/// Lift for ℓ∞ regret: payoff `(U^a, U)` and target
/// `{(z, V) ∈ [0,1]^{A+1} : z ≥ V^a ∀a}`; outcomes must lie in [0,1].
#[derive(Clone, Debug)]
pub struct LinfLift {
    pub actions: usize,
    pub target: ConvexTarget,
}

pub fn linf_regret_lift(actions: usize) -> Result<LinfLift> {
    if actions == 0 {
        return arg("need at least one action");
    }
    let d = actions + 1;
    let mut normals = Vec::new();
    let mut offsets = Vec::new();
    for a in 0..actions {
        let mut n = vec![0.0; d];
        n[0] = -1.0;
        n[a + 1] = 1.0;
        normals.push(n);
        offsets.push(0.0);
    }
    for k in 0..d {
        let mut up = vec![0.0; d];
        up[k] = 1.0;
        normals.push(up.clone());
        offsets.push(1.0);
        up[k] = -1.0;
        normals.push(up);
        offsets.push(0.0);
    }
    let mut witness = vec![0.0; d];
    witness[0] = 1.0;
    Ok(LinfLift { actions, target: ConvexTarget::halfspaces(normals, offsets, witness)? })
}

impl LinfLift {
    pub fn payoff(&self, a: usize, u: &[f64]) -> Vec<f64> {
        let mut out = vec![u[a]];
        out.extend_from_slice(u);
        out
    }

    /// Vector game `g(a,b) = (ρ(a,b), ρ(·,b))`.
    pub fn game(&self, rho: &ScalarGame) -> Result<VectorGame> {
        check_dim(self.actions, rho.rows())?;
        VectorGame::from_fn(rho.rows(), rho.cols(), self.actions + 1, |a, b| {
            let u: Vec<f64> = (0..rho.rows()).map(|k| rho.get(k, b)).collect();
            self.payoff(a, &u)
        })
    }

    /// `‖r̄⁺‖∞` recovered from a lifted average `(z̄, V̄)`.
    pub fn regret_inf(avg: &[f64]) -> f64 {
        avg[1..].iter().fold(0.0f64, |m, v| m.max(v - avg[0]))
    }
}

/// Vector game of external regrets `r(a,b) = ρ(·,b) − ρ(a,b)·1`.
pub fn regret_game(rho: &ScalarGame) -> Result<VectorGame> {
    VectorGame::from_fn(rho.rows(), rho.cols(), rho.rows(), |a, b| {
        (0..rho.rows()).map(|k| rho.get(k, b) - rho.get(a, b)).collect()
    })
}

/// Vector game of internal regrets, flattened row-major over `A×A`.
pub fn internal_regret_game(rho: &ScalarGame) -> Result<VectorGame> {
    let na = rho.rows();
    VectorGame::from_fn(na, rho.cols(), na * na, |a, b| {
        let mut out = vec![0.0; na * na];
        for k in 0..na {
            out[a * na + k] = rho.get(k, b) - rho.get(a, b);
        }
        out
    })
}

pub fn outcome_vector(rho: &ScalarGame, b: usize) -> Vec<f64> {
    (0..rho.rows()).map(|a| rho.get(a, b)).collect()
}

/// Euclidean projection on the unit ball.
pub fn ball_project(theta: &[f64]) -> Vec<f64> {
    let n = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n <= 1.0 {
        theta.to_vec()
    } else {
        theta.iter().map(|v| v / n).collect()
    }
}

/// Optimal play in the scalar game `⟨θ, g(a,b)⟩` that the player minimizes.
pub fn regret_driven_approach_step(theta: &[f64], game: &VectorGame) -> Result<MixedAction> {
    check_dim(game.dim(), theta.len())?;
    if theta.iter().all(|v| *v == 0.0) {
        return Ok(MixedAction::uniform(game.rows()));
    }
    let mut data = Vec::with_capacity(game.rows() * game.cols());
    for a in 0..game.rows() {
        for b in 0..game.cols() {
            data.push(-game.payoff(a, b).iter().zip(theta).map(|(g, t)| g * t).sum::<f64>());
        }
    }
    Ok(solve(&ScalarGame::new(game.rows(), game.cols(), data)?, 1e-9)?.x)
}

/// Which learner a [`Learner`] runs.
#[derive(Clone, Debug, PartialEq)]
pub enum Algorithm {
    RegretMatching,
    ExpWeights,
    Ogd,
    Internal,
    Phi(SwapFamily),
    /// Regret matching over Φ turned into play through the fixed-point reduction.
    ExtToPhi(SwapFamily),
}

/// A no-regret player for an outcome game, usable as an engine [`Strategy`].
pub struct Learner {
    rho: ScalarGame,
    algorithm: Algorithm,
    state: RegretState,
    outcome_sum: Vec<f64>,
    ogd_x: MixedAction,
    ogd_block: u32,
    ogd_pos: usize,
}

impl Learner {
    pub fn new(rho: ScalarGame, algorithm: Algorithm) -> Result<Self> {
        let na = rho.rows();
        let family = match &algorithm {
            Algorithm::Phi(f) | Algorithm::ExtToPhi(f) => f.clone(),
            _ => SwapFamily::external(na),
        };
        let state = RegretState::new(na, family)?;
        Ok(Self {
            algorithm,
            state,
            outcome_sum: vec![0.0; na],
            ogd_x: MixedAction::uniform(na),
            ogd_block: 0,
            ogd_pos: 0,
            rho,
        })
    }

    pub fn state(&self) -> &RegretState {
        &self.state
    }

    pub fn game(&self) -> &ScalarGame {
        &self.rho
    }

    /// Feeds one realized stage.
    pub fn observe_stage(&mut self, x: &MixedAction, a: Option<usize>, b: usize) -> Result<()> {
        let u = outcome_vector(&self.rho, b);
        match a {
            Some(a) => self.state.update(a, &u)?,
            None => self.state.update_mixed(x, &u)?,
        }
        for (s, v) in self.outcome_sum.iter_mut().zip(&u) {
            *s += v;
        }
        if self.algorithm == Algorithm::Ogd {
            let na = self.rho.rows() as f64;
            let len = 1usize << self.ogd_block;
            let eta = 1.0 / (len as f64 * na).sqrt();
            self.ogd_x = ogd_step(&self.ogd_x, &u, eta)?;
            self.ogd_pos += 1;
            if self.ogd_pos == len {
                self.ogd_block += 1;
                self.ogd_pos = 0;
                self.ogd_x = MixedAction::uniform(self.rho.rows());
            }
        }
        Ok(())
    }

    /// Mixed action for the next stage from the current statistics.
    pub fn current(&self) -> Result<MixedAction> {
        let n = self.state.stages();
        match &self.algorithm {
            Algorithm::RegretMatching => regret_matching_step(&self.state.external_avg()),
            Algorithm::ExpWeights => {
                if n == 0 {
                    return Ok(MixedAction::uniform(self.rho.rows()));
                }
                let eta = (8.0 * (self.rho.rows() as f64).ln() / n as f64).sqrt();
                Ok(softmax(&self.outcome_sum, eta))
            }
            Algorithm::Ogd => Ok(self.ogd_x.clone()),
            Algorithm::Internal => invariant_step(&positive_matrix(&self.state.internal_avg())),
            Algorithm::Phi(f) => invariant_step(&theta_matrix(&positive_part(&self.state.phi_avg()), f)?),
            Algorithm::ExtToPhi(f) => {
                let theta = regret_matching_step(&self.state.phi_avg())?;
                ext_to_phi_step(&theta, f)
            }
        }
    }
}

impl Strategy for Learner {
    fn next(&mut self, view: &HistoryView<'_>) -> Result<MixedAction> {
        if let Some(last) = view.last {
            let x = MixedAction::new(last.player_mixed.clone())?;
            self.observe_stage(&x, last.player_action, last.nature_action)?;
        }
        self.current()
    }

    fn reset(&mut self) {
        let fresh = Learner::new(self.rho.clone(), self.algorithm.clone()).expect("validated at construction");
        *self = fresh;
    }
}

/// Nature minimizing the player's outcome against the player's previous mixed action.
pub struct BestResponseNature {
    pub rho: ScalarGame,
}

impl Nature for BestResponseNature {
    fn next(&mut self, view: &HistoryView<'_>, _: &MixedAction) -> Result<NatureMove> {
        let Some(last) = view.last else { return Ok(NatureMove::Pure(0)) };
        let payoffs = self.rho.col_payoffs(&last.player_mixed);
        let b = payoffs
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (b, v)| if *v < best.1 { (b, *v) } else { best })
            .0;
        Ok(NatureMove::Pure(b))
    }
}

/// Regret-driven approachability of `{0}`: projected gradient ascent on the unit
/// ball picks the direction `θ`, then the player minimizes `⟨θ, g⟩`.
pub struct RegretDriven {
    theta: Vec<f64>,
    t: usize,
}

impl RegretDriven {
    pub fn new(dim: usize) -> Self {
        Self { theta: vec![0.0; dim], t: 0 }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }
}

impl Strategy for RegretDriven {
    fn next(&mut self, view: &HistoryView<'_>) -> Result<MixedAction> {
        if let Some(last) = view.last {
            self.t += 1;
            let eta = 1.0 / (view.game.norm().max(1e-12) * (self.t as f64).sqrt());
            let stepped: Vec<f64> = self.theta.iter().zip(&last.payoff).map(|(t, g)| t + eta * g).collect();
            self.theta = ball_project(&stepped);
        }
        regret_driven_approach_step(&self.theta, view.game)
    }

    fn reset(&mut self) {
        self.theta.iter_mut().for_each(|v| *v = 0.0);
        self.t = 0;
    }
}

pub fn require_singleton_zero(target: &ConvexTarget) -> Result<()> {
    match target {
        ConvexTarget::Box(b) if b.lower().iter().chain(b.upper()).all(|v| *v == 0.0) => Ok(()),
        _ => Err(Error::Unsupported("regret-driven approachability targets {0} only".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn regret_updates() {
        let mut s = RegretState::new(2, SwapFamily::external(2)).unwrap();
        s.update(0, &[1.0, 0.0]).unwrap();
        assert_eq!(s.external_avg(), vec![0.0, -1.0]);
        s.update(0, &[0.0, 1.0]).unwrap();
        assert_eq!(s.external_avg(), vec![0.0, 0.0]);
        let mut c = RegretState::new(3, SwapFamily::internal(3)).unwrap();
        c.update(1, &[0.4; 3]).unwrap();
        assert!(c.external_avg().iter().chain(c.phi_avg().iter()).all(|v| *v == 0.0));
        assert!(c.update(3, &[0.0; 3]).is_err());
    }

    #[test]
    fn regret_matching_examples() {
        assert!(close(regret_matching_step(&[0.2, -0.1, 0.3]).unwrap().probs(), &[0.4, 0.0, 0.6], 1e-12));
        assert_eq!(regret_matching_step(&[-0.2, 0.0]).unwrap(), MixedAction::uniform(2));
        assert_eq!(regret_matching_step(&[1.0, 1.0]).unwrap().probs(), &[0.5, 0.5]);
    }

    #[test]
    fn exp_weights_examples() {
        assert_eq!(exp_weights_step(&[0.3; 4], 5).unwrap(), MixedAction::uniform(4));
        assert!(close(softmax(&[1.0, 0.0], 1.0).probs(), &[0.731_058_578_6, 0.268_941_421_4], 1e-9));
        assert!((exp_weights_eta(8, 2) - (64.0 * 2f64.ln()).sqrt()).abs() < 1e-12);
        assert!((exp_weights_eta(8, 2) - 6.6607).abs() < 1e-3);
    }

    #[test]
    fn ogd_examples() {
        let x = MixedAction::new(vec![0.3, 0.7]).unwrap();
        assert_eq!(ogd_step(&x, &[5.0, -1.0], 0.0).unwrap(), x);
        let h = MixedAction::uniform(2);
        assert!(close(ogd_step(&h, &[1.0, 0.0], 0.1).unwrap().probs(), &[0.55, 0.45], 1e-12));
        assert!(close(ogd_step(&x, &[1.0, 1.0], 0.7).unwrap().probs(), x.probs(), 1e-12));
    }

    #[test]
    fn theta_examples() {
        let t = theta_matrix(&[0.2, 0.3], &SwapFamily::external(2)).unwrap();
        assert_eq!(t, vec![vec![0.2, 0.3], vec![0.2, 0.3]]);
        let t = theta_matrix(&[0.7, 0.1], &SwapFamily::internal(2)).unwrap();
        assert!((t[0][1] - 0.7).abs() < 1e-15 && (t[1][0] - 0.1).abs() < 1e-15);
        let t = theta_matrix(&[0.4], &SwapFamily::identity(3)).unwrap();
        assert_eq!(t[1], vec![0.0, 0.4, 0.0]);
        assert_eq!(t[0][1] + t[1][0] + t[2][0], 0.0);
    }

    #[test]
    fn invariant_step_examples() {
        assert_eq!(invariant_step(&vec![vec![0.0; 3]; 3]).unwrap(), MixedAction::uniform(3));
        assert!(close(invariant_step(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap().probs(), &[0.5, 0.5], 1e-12));
        assert!(close(invariant_step(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap().probs(), &[0.0, 1.0], 1e-12));
    }

    #[test]
    fn ext_to_phi_examples() {
        let id = SwapFamily::identity(3);
        assert_eq!(ext_to_phi_step(&MixedAction::uniform(1), &id).unwrap(), MixedAction::uniform(3));
        let ext = SwapFamily::external(3);
        let p = ext_to_phi_step(&MixedAction::pure(3, 2), &ext).unwrap();
        assert!(close(p.probs(), &[0.0, 0.0, 1.0], 1e-12));
        let fam = SwapFamily::new(2, vec![vec![0, 1], vec![1, 0]]).unwrap();
        let p = ext_to_phi_step(&MixedAction::uniform(2), &fam).unwrap();
        assert!(close(p.probs(), &[0.5, 0.5], 1e-12));
    }

    #[test]
    fn linf_lift_examples() {
        let lift = linf_regret_lift(2).unwrap();
        assert!(lift.target.distance(&[0.7, 0.7, 0.2]).unwrap() < 1e-9);
        let d = lift.target.distance(&[0.0, 1.0, 0.0]).unwrap();
        assert!((d - 0.5f64.sqrt()).abs() < 1e-9);
        assert_eq!(LinfLift::regret_inf(&[0.0, 1.0, 0.0]), 1.0);
        assert!(lift.target.contains(&lift.payoff(0, &[1.0, 0.0]), 1e-12));
    }

    #[test]
    fn regret_driven_examples() {
        let g = VectorGame::new(2, 1, 1, vec![-1.0, 1.0]).unwrap();
        assert_eq!(regret_driven_approach_step(&[0.0], &g).unwrap(), MixedAction::uniform(2));
        assert_eq!(regret_driven_approach_step(&[1.0], &g).unwrap().probs(), &[1.0, 0.0]);
        assert!(close(&ball_project(&[3.0, 4.0]), &[0.6, 0.8], 1e-15));
    }

    #[test]
    fn family_statistics() {
        assert_eq!(SwapFamily::internal(4).a_phi(), 3);
        assert_eq!(SwapFamily::external(4).a_phi(), 3);
        assert_eq!(SwapFamily::identity(4).a_phi(), 0);
        assert!(SwapFamily::new(2, vec![vec![0, 2]]).is_err());
    }
}
