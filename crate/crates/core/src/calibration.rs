//! Calibrated forecasting on finite grids of Δ(Ω).
//!
//! Outcomes are written in the grid's own coordinates (see [`Coords`]); for
//! full coordinates that is the one-hot vector `e_ω`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{arg, check_dim, Error, Result};
use crate::geometry::{dist, dot, Coords, Grid, MixedAction};
use crate::regret::{invariant_step, positive_matrix};

/// Predicted cells and outcomes, with per-cell counters.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibTranscript {
    cells: Vec<usize>,
    outcomes: Vec<usize>,
    counts: Vec<usize>,
    /// `hits[ℓ][ω]`: stages predicting `ℓ` whose outcome was `ω`.
    hits: Vec<Vec<usize>>,
}

impl CalibTranscript {
    pub fn new(cells: usize, outcomes: usize) -> Self {
        Self { cells: Vec::new(), outcomes: Vec::new(), counts: vec![0; cells], hits: vec![vec![0; outcomes]; cells] }
    }

    pub fn for_grid(grid: &Grid) -> Self {
        Self::new(grid.len(), grid.outcomes())
    }

    pub fn push(&mut self, cell: usize, outcome: usize) -> Result<()> {
        if cell >= self.counts.len() {
            return arg(format!("cell {cell} out of range ({} cells)", self.counts.len()));
        }
        if outcome >= self.hits[0].len() {
            return arg(format!("outcome {outcome} out of range ({} outcomes)", self.hits[0].len()));
        }
        self.cells.push(cell);
        self.outcomes.push(outcome);
        self.counts[cell] += 1;
        self.hits[cell][outcome] += 1;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn num_cells(&self) -> usize {
        self.counts.len()
    }

    pub fn num_outcomes(&self) -> usize {
        self.hits[0].len()
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn outcomes(&self) -> &[usize] {
        &self.outcomes
    }

    pub fn count(&self, cell: usize) -> usize {
        self.counts[cell]
    }

    pub fn hits(&self, cell: usize) -> &[usize] {
        &self.hits[cell]
    }

    /// Empirical outcome frequency of the whole transcript (full coordinates).
    pub fn frequency(&self) -> Vec<f64> {
        let mut f = vec![0.0; self.num_outcomes()];
        for &o in &self.outcomes {
            f[o] += 1.0;
        }
        let n = self.len().max(1) as f64;
        f.iter_mut().for_each(|v| *v /= n);
        f
    }

    /// Sum of outcome points over the stages predicting `cell`, in grid coordinates.
    fn outcome_sum(&self, grid: &Grid, cell: usize) -> Vec<f64> {
        let mut s = vec![0.0; grid.dim()];
        for (w, &h) in self.hits[cell].iter().enumerate() {
            if h > 0 {
                for (o, p) in s.iter_mut().zip(grid.outcome_point(w)) {
                    *o += h as f64 * p;
                }
            }
        }
        s
    }

    /// `ω̄_n[ℓ]` in grid coordinates; `None` for a cell never predicted.
    pub fn mean_outcome(&self, grid: &Grid, cell: usize) -> Option<Vec<f64>> {
        let n = self.counts[cell];
        (n > 0).then(|| self.outcome_sum(grid, cell).into_iter().map(|v| v / n as f64).collect())
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        check_dim(grid.len(), self.num_cells())?;
        check_dim(grid.outcomes(), self.num_outcomes())
    }

    /// CSV with header `stage,cell,prediction_coords,outcome`; coordinates are `;`-separated.
    pub fn write_csv<W: Write>(&self, grid: &Grid, out: W) -> Result<()> {
        self.check_grid(grid)?;
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Argument(e.to_string());
        w.write_record(["stage", "cell", "prediction_coords", "outcome"]).map_err(io)?;
        for (i, (&c, &o)) in self.cells.iter().zip(&self.outcomes).enumerate() {
            let coords: Vec<String> = grid.point(c).iter().map(|v| v.to_string()).collect();
            w.write_record([(i + 1).to_string(), c.to_string(), coords.join(";"), o.to_string()]).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Argument(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScoreMode {
    /// `‖ω̄ − p[ℓ]‖ − min_k ‖ω̄ − p[k]‖`
    Plain,
    /// `(‖ω̄ − p[ℓ]‖² − ν[ℓ]) − min_k (‖ω̄ − p[k]‖² − ν[k])`
    Squared,
}

/// `max_ℓ (N_n[ℓ]/n)·score(ℓ)`; empty cells contribute 0.
pub fn calib_score(t: &CalibTranscript, grid: &Grid, mode: ScoreMode) -> Result<f64> {
    t.check_grid(grid)?;
    if t.is_empty() {
        return Ok(0.0);
    }
    let n = t.len() as f64;
    let mut best = 0.0f64;
    for l in 0..grid.len() {
        let Some(w) = t.mean_outcome(grid, l) else { continue };
        let cost = |k: usize| match mode {
            ScoreMode::Plain => dist(&w, grid.point(k)),
            ScoreMode::Squared => dist(&w, grid.point(k)).powi(2) - grid.weights()[k],
        };
        let floor = (0..grid.len()).map(cost).fold(f64::INFINITY, f64::min);
        best = best.max(t.count(l) as f64 / n * (cost(l) - floor));
    }
    Ok(best)
}

/// Averaged internal regret `R̄[ℓ][k]` of the game `ρ(ℓ,ω) = −‖ω − p[ℓ]‖² + ν[ℓ]`.
pub fn calibration_regret(t: &CalibTranscript, grid: &Grid) -> Result<Vec<Vec<f64>>> {
    t.check_grid(grid)?;
    let sums: Vec<Vec<f64>> = (0..grid.len()).map(|l| t.outcome_sum(grid, l)).collect();
    Ok(regret_from_sums(&t.counts, &sums, grid.points(), grid.weights(), t.len()))
}

/// The same regret from per-cell counts and outcome sums: the `‖ω‖²` terms cancel.
pub fn regret_from_sums(
    counts: &[usize],
    sums: &[Vec<f64>],
    points: &[Vec<f64>],
    nu: &[f64],
    n: usize,
) -> Vec<Vec<f64>> {
    let nl = points.len();
    let mut r = vec![vec![0.0; nl]; nl];
    if n == 0 {
        return r;
    }
    for l in 0..nl {
        let c = counts[l] as f64;
        if c == 0.0 {
            continue;
        }
        let cost = |k: usize| {
            let p = &points[k];
            -2.0 * dot(&sums[l], p) + c * dot(p, p) - c * nu[k]
        };
        let own = cost(l);
        for k in 0..nl {
            if k != l {
                r[l][k] = (own - cost(k)) / n as f64;
            }
        }
    }
    r
}

/// Invariant measure of `(R̄)⁺` for the auxiliary calibration game.
pub fn grid_forecaster_step(t: &CalibTranscript, grid: &Grid) -> Result<MixedAction> {
    invariant_step(&positive_matrix(&calibration_regret(t, grid)?))
}

/// Internal regret restricted to lattice neighbours, zero elsewhere.
pub fn neighbor_regret(t: &CalibTranscript, grid: &Grid) -> Result<Vec<Vec<f64>>> {
    let full = calibration_regret(t, grid)?;
    let mut r = vec![vec![0.0; grid.len()]; grid.len()];
    for (l, row) in r.iter_mut().enumerate() {
        for k in grid.neighbors(l)? {
            row[k] = full[l][k];
        }
    }
    Ok(r)
}

/// Invariant measure of the neighbour-restricted regret; needs a regular grid.
pub fn eps_forecaster_step(t: &CalibTranscript, grid: &Grid) -> Result<MixedAction> {
    invariant_step(&positive_matrix(&neighbor_regret(t, grid)?))
}

/// `ω = 0` ("no rain") when the forecast of rain is at least 1/2, `ω = 1` otherwise.
pub fn oakes_dawid_next(p: f64) -> usize {
    if p >= 0.5 {
        0
    } else {
        1
    }
}

/// Foster's grid `p[ℓ] = ε + 2ℓε`, with the last point capped at 1 so that
/// `p[L−1] + ε ≥ 1`.
pub fn foster_grid(eps: f64) -> Result<Grid> {
    if !(eps > 0.0 && eps < 0.5) {
        return arg(format!("Foster's grid needs 0 < ε < 1/2, got {eps}"));
    }
    let cells = (1.0 / (2.0 * eps) - 1e-12).ceil() as usize;
    let points = (0..cells).map(|l| vec![(eps + 2.0 * l as f64 * eps).min(1.0)]).collect();
    Grid::new(points, Coords::Reduced)
}

/// Running `e^ℓ = (N[ℓ]/n)(ω̄[ℓ] − (p[ℓ] + ε))` and `d^ℓ = (N[ℓ]/n)((p[ℓ] − ε) − ω̄[ℓ])`.
#[derive(Clone, Debug, PartialEq)]
pub struct FosterState {
    pub eps: f64,
    pub points: Vec<f64>,
    pub e: Vec<f64>,
    pub d: Vec<f64>,
}

/// How the two-point prediction splits between `p[ℓ*]` and `p[ℓ*−1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FosterMixing {
    /// `P(p[ℓ*]) = e^{ℓ*−1}/(e^{ℓ*−1} + d^{ℓ*})`: cancels the cross term of `e² + d²`.
    #[default]
    Balanced,
    /// `P(p[ℓ*]) = d^{ℓ*}/(e^{ℓ*−1} + d^{ℓ*})`, the literal reading of the text.
    Literal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FosterStep {
    pub dist: MixedAction,
    pub probes: usize,
}

impl FosterState {
    pub fn new(eps: f64) -> Result<Self> {
        let g = foster_grid(eps)?;
        let points: Vec<f64> = g.points().iter().map(|p| p[0]).collect();
        let l = points.len();
        Ok(Self { eps, points, e: vec![0.0; l], d: vec![0.0; l] })
    }

    pub fn from_transcript(eps: f64, t: &CalibTranscript) -> Result<Self> {
        let mut s = Self::new(eps)?;
        check_dim(s.points.len(), t.num_cells())?;
        check_dim(2, t.num_outcomes())?;
        if t.is_empty() {
            return Ok(s);
        }
        let n = t.len() as f64;
        for l in 0..s.points.len() {
            let c = t.count(l) as f64;
            let ones = t.hits(l)[1] as f64;
            s.e[l] = (ones - c * (s.points[l] + eps)) / n;
            s.d[l] = (c * (s.points[l] - eps) - ones) / n;
        }
        Ok(s)
    }

    pub fn theta(&self, l: usize) -> Result<f64> {
        match (self.e[l] > 0.0, self.d[l] > 0.0) {
            (true, true) => Err(Error::Internal(format!("e and d both positive in cell {l}"))),
            (true, false) => Ok(self.e[l]),
            (false, true) => Ok(-self.d[l]),
            (false, false) => Ok(0.0),
        }
    }

    /// `max_ℓ max(e^ℓ, d^ℓ)`.
    pub fn max_error(&self) -> f64 {
        self.e.iter().chain(&self.d).fold(f64::NEG_INFINITY, |m, v| m.max(*v))
    }
}

/// Bisection for the first `ℓ` with `θ^ℓ ≤ 0`, relying on `θ^{L−1} ≤ 0`.
pub fn foster_step(state: &FosterState, mixing: FosterMixing) -> Result<FosterStep> {
    let l = state.points.len();
    let mut probed: Vec<Option<f64>> = vec![None; l];
    let mut probes = 0;
    let mut theta = |k: usize| -> Result<f64> {
        if let Some(v) = probed[k] {
            return Ok(v);
        }
        probes += 1;
        let v = state.theta(k)?;
        probed[k] = Some(v);
        Ok(v)
    };
    let (mut lo, mut hi) = (0, l - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if theta(mid)? <= 0.0 {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let star = lo;
    let at = theta(star)?;
    if at == 0.0 || star == 0 {
        if at != 0.0 {
            return Err(Error::Internal("θ of the first cell is negative".into()));
        }
        return Ok(FosterStep { dist: MixedAction::pure(l, star), probes });
    }
    if at > 0.0 {
        return Err(Error::Internal("θ of the last cell is positive".into()));
    }
    let (e, d) = (state.e[star - 1], state.d[star]);
    let q = match mixing {
        FosterMixing::Balanced => e / (e + d),
        FosterMixing::Literal => d / (e + d),
    };
    let mut probs = vec![0.0; l];
    probs[star] = q;
    probs[star - 1] = 1.0 - q;
    Ok(FosterStep { dist: MixedAction::new(probs)?, probes })
}

/// A forecaster choosing a distribution over grid cells from the transcript so far.
pub trait Forecaster: Send {
    fn grid(&self) -> &Grid;
    fn forecast(&mut self, t: &CalibTranscript) -> Result<MixedAction>;
}

/// Internal-regret forecaster on an arbitrary (optionally weighted) grid.
pub struct GridForecaster(pub Grid);

impl Forecaster for GridForecaster {
    fn grid(&self) -> &Grid {
        &self.0
    }
    fn forecast(&mut self, t: &CalibTranscript) -> Result<MixedAction> {
        grid_forecaster_step(t, &self.0)
    }
}

/// Neighbour-restricted forecaster on a regular grid.
pub struct EpsForecaster(pub Grid);

impl EpsForecaster {
    pub fn new(grid: Grid) -> Result<Self> {
        if grid.lattice().is_none() {
            return Err(Error::Unsupported("the ε-forecaster needs a regular grid".into()));
        }
        Ok(Self(grid))
    }
}

impl Forecaster for EpsForecaster {
    fn grid(&self) -> &Grid {
        &self.0
    }
    fn forecast(&mut self, t: &CalibTranscript) -> Result<MixedAction> {
        eps_forecaster_step(t, &self.0)
    }
}

/// Foster's binary forecaster.
pub struct FosterForecaster {
    grid: Grid,
    eps: f64,
    mixing: FosterMixing,
}

impl FosterForecaster {
    pub fn new(eps: f64, mixing: FosterMixing) -> Result<Self> {
        Ok(Self { grid: foster_grid(eps)?, eps, mixing })
    }
}

impl Forecaster for FosterForecaster {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn forecast(&mut self, t: &CalibTranscript) -> Result<MixedAction> {
        Ok(foster_step(&FosterState::from_transcript(self.eps, t)?, self.mixing)?.dist)
    }
}

/// Deterministic: predicts the grid cell nearest to the empirical frequency.
pub struct FrequencyForecaster(pub Grid);

impl Forecaster for FrequencyForecaster {
    fn grid(&self) -> &Grid {
        &self.0
    }
    fn forecast(&mut self, t: &CalibTranscript) -> Result<MixedAction> {
        let f = t.frequency();
        let q = match self.0.coords() {
            Coords::Full => f,
            Coords::Reduced => f[1..].to_vec(),
        };
        Ok(MixedAction::pure(self.0.len(), crate::geometry::cell_assign(&self.0, &q)?))
    }
}

/// Nature's move in a forecasting game.
pub enum OutcomeMove {
    Pure(usize),
    Mixed(MixedAction),
}

/// Nature sees the transcript and the forecaster's current mixed forecast, not the realized cell.
pub trait OutcomeNature: Send {
    fn next(&mut self, t: &CalibTranscript, grid: &Grid, forecast: &MixedAction) -> Result<OutcomeMove>;
}

/// Outcome `1` (rain) exactly when the expected forecast of rain is below 1/2.
pub struct OakesDawid;

impl OutcomeNature for OakesDawid {
    fn next(&mut self, _: &CalibTranscript, grid: &Grid, forecast: &MixedAction) -> Result<OutcomeMove> {
        if grid.outcomes() != 2 {
            return Err(Error::Unsupported("the Oakes–Dawid adversary needs two outcomes".into()));
        }
        let rain: Vec<f64> = grid
            .points()
            .iter()
            .map(|p| match grid.coords() {
                Coords::Full => p[1],
                Coords::Reduced => p[0],
            })
            .collect();
        Ok(OutcomeMove::Pure(oakes_dawid_next(forecast.expect(&rain))))
    }
}

/// I.i.d. outcomes.
pub struct IidOutcomes(pub MixedAction);

impl OutcomeNature for IidOutcomes {
    fn next(&mut self, _: &CalibTranscript, _: &Grid, _: &MixedAction) -> Result<OutcomeMove> {
        Ok(OutcomeMove::Mixed(self.0.clone()))
    }
}

/// Cycles through a fixed list of outcomes.
pub struct ScriptedOutcomes(pub Vec<usize>);

impl OutcomeNature for ScriptedOutcomes {
    fn next(&mut self, t: &CalibTranscript, _: &Grid, _: &MixedAction) -> Result<OutcomeMove> {
        if self.0.is_empty() {
            return arg("empty script");
        }
        Ok(OutcomeMove::Pure(self.0[t.len() % self.0.len()]))
    }
}

/// Plays `n` stages: the forecaster's cell is drawn first, then Nature's outcome if mixed.
pub fn run_forecaster(
    forecaster: &mut dyn Forecaster,
    nature: &mut dyn OutcomeNature,
    n: usize,
    seed: u64,
) -> Result<CalibTranscript> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = CalibTranscript::for_grid(forecaster.grid());
    for stage in 0..n {
        let lambda = forecaster.forecast(&t)?;
        check_dim(forecaster.grid().len(), lambda.len())?;
        let cell = lambda.sample(rng.gen::<f64>());
        let outcome = match nature.next(&t, forecaster.grid(), &lambda)? {
            OutcomeMove::Pure(w) => w,
            OutcomeMove::Mixed(m) => m.sample(rng.gen::<f64>()),
        };
        if outcome >= t.num_outcomes() {
            return Err(Error::Protocol { stage: stage + 1, msg: format!("outcome {outcome} out of range") });
        }
        t.push(cell, outcome)?;
    }
    Ok(t)
}

/// `max_p (|N[p,ε]|/n)(‖p̄[p,ε] − ω̄[p,ε]‖ − ε)` with `p` ranging over grid points and
/// midpoints of pairs of grid points; exact for grid-valued predictions on a 1-d grid.
pub fn eps_calibration_score(t: &CalibTranscript, grid: &Grid, eps: f64) -> Result<f64> {
    t.check_grid(grid)?;
    if t.is_empty() {
        return Ok(0.0);
    }
    let mut centers: Vec<Vec<f64>> = grid.points().to_vec();
    for i in 0..grid.len() {
        for j in i + 1..grid.len() {
            centers.push(grid.point(i).iter().zip(grid.point(j)).map(|(a, b)| (a + b) / 2.0).collect());
        }
    }
    let n = t.len() as f64;
    let dim = grid.dim();
    let mut best = f64::NEG_INFINITY;
    for c in &centers {
        let mut count = 0usize;
        let mut psum = vec![0.0; dim];
        let mut wsum = vec![0.0; dim];
        for l in 0..grid.len() {
            let k = t.count(l);
            if k == 0 || dist(grid.point(l), c) > eps + 1e-12 {
                continue;
            }
            count += k;
            for (o, p) in psum.iter_mut().zip(grid.point(l)) {
                *o += k as f64 * p;
            }
            for (o, p) in wsum.iter_mut().zip(t.outcome_sum(grid, l)) {
                *o += p;
            }
        }
        if count == 0 {
            continue;
        }
        let gap = dist(&psum, &wsum) / count as f64;
        best = best.max(count as f64 / n * (gap - eps));
    }
    Ok(best)
}

/// `sup_ℓ (N[ℓ]/n)(‖p[ℓ] − ω̄[ℓ]‖ − ε)`, the per-cell ε-score.
pub fn cell_eps_score(t: &CalibTranscript, grid: &Grid, eps: f64) -> Result<f64> {
    t.check_grid(grid)?;
    let n = t.len().max(1) as f64;
    let mut best = f64::NEG_INFINITY;
    for l in 0..grid.len() {
        if let Some(w) = t.mean_outcome(grid, l) {
            best = best.max(t.count(l) as f64 / n * (dist(grid.point(l), &w) - eps));
        }
    }
    Ok(if best.is_finite() { best } else { 0.0 })
}

/// Barycentric weights of `p` on the two lattice points around it; only Ω = 2 is supported.
pub fn triangulation_round(p: &[f64], grid: &Grid) -> Result<MixedAction> {
    if grid.outcomes() != 2 || grid.coords() != Coords::Reduced {
        return Err(Error::Unsupported("triangulation rounding is implemented for Ω = 2 in reduced coordinates".into()));
    }
    let lat = grid
        .lattice()
        .ok_or_else(|| Error::Unsupported("triangulation rounding needs a regular grid".into()))?;
    check_dim(1, p.len())?;
    let x = p[0];
    if !(-1e-12..=1.0 + 1e-12).contains(&x) {
        return arg(format!("{x} is not a point of Δ(2)"));
    }
    let h = lat.step();
    let r = (x / h).max(0.0);
    let k = (r + 1e-9).floor() as usize;
    let frac = r - k as f64;
    let mut probs = vec![0.0; grid.len()];
    let lo = lat.find(&[k]).ok_or_else(|| Error::Argument(format!("{x} lies beyond the last grid point")))?;
    if frac <= 1e-9 {
        probs[lo] = 1.0;
    } else {
        let hi = lat.find(&[k + 1]).ok_or_else(|| Error::Argument(format!("{x} lies beyond the last grid point")))?;
        probs[lo] = 1.0 - frac;
        probs[hi] = frac;
    }
    MixedAction::new(probs)
}

/// `(ε_k, 2^k)` with `ε_k = (d/2^k)^{1/(d+2)}` for `k = 0, …, blocks − 1`.
pub fn borel_doubling_schedule(d: usize, blocks: usize) -> Result<Vec<(f64, usize)>> {
    if blocks == 0 || d == 0 {
        return arg("the schedule needs d ≥ 1 and at least one block");
    }
    if blocks > 63 {
        return arg("block length 2^k overflows for k ≥ 63");
    }
    Ok((0..blocks)
        .map(|k| {
            let len = 1usize << k;
            ((d as f64 / len as f64).powf(1.0 / (d as f64 + 2.0)), len)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_regular_grid;

    fn line() -> Grid {
        make_regular_grid(1, 0.25).unwrap()
    }

    fn transcript(grid: &Grid, stages: &[(usize, usize)]) -> CalibTranscript {
        let mut t = CalibTranscript::for_grid(grid);
        for &(c, o) in stages {
            t.push(c, o).unwrap();
        }
        t
    }

    #[test]
    fn scores() {
        let g = line();
        let alt = transcript(&g, &[(1, 0), (1, 1), (1, 0), (1, 1)]);
        assert_eq!(calib_score(&alt, &g, ScoreMode::Plain).unwrap(), 0.0);
        let wrong = transcript(&g, &[(0, 1); 5]);
        assert!((calib_score(&wrong, &g, ScoreMode::Plain).unwrap() - 1.0).abs() < 1e-12);

        let two = Grid::new(vec![vec![0.0], vec![1.0]], Coords::Reduced).unwrap().with_weights(vec![1.0, 0.0]).unwrap();
        let t = transcript(&two, &[(0, 1); 3]);
        assert!(calib_score(&t, &two, ScoreMode::Squared).unwrap().abs() < 1e-12);
    }

    #[test]
    fn grid_step_examples() {
        let g = line();
        assert_eq!(grid_forecaster_step(&CalibTranscript::for_grid(&g), &g).unwrap(), MixedAction::uniform(3));
        let lam = grid_forecaster_step(&transcript(&g, &[(0, 1)]), &g).unwrap();
        assert!(lam.probs()[0] <= 1e-6);
    }

    #[test]
    fn eps_step_examples() {
        let g = line();
        assert_eq!(eps_forecaster_step(&CalibTranscript::for_grid(&g), &g).unwrap(), MixedAction::uniform(3));
        let lam = eps_forecaster_step(&transcript(&g, &[(0, 1)]), &g).unwrap();
        assert!(lam.probs()[0] <= 1e-6);
        let irregular = Grid::new(vec![vec![0.0], vec![0.3]], Coords::Reduced).unwrap();
        assert!(matches!(EpsForecaster::new(irregular), Err(Error::Unsupported(_))));
    }

    #[test]
    fn oakes_dawid_rule() {
        assert_eq!(oakes_dawid_next(0.7), 0);
        assert_eq!(oakes_dawid_next(0.3), 1);
        assert_eq!(oakes_dawid_next(0.5), 0);
    }

    #[test]
    fn foster_examples() {
        let mut s = FosterState::new(0.1).unwrap();
        let step = foster_step(&s, FosterMixing::Balanced).unwrap();
        assert_eq!(step.dist, MixedAction::pure(5, 0));

        s.e[1] = 0.2;
        s.d[2] = 0.3;
        s.d[3] = 0.1;
        s.d[4] = 0.1;
        let lit = foster_step(&s, FosterMixing::Literal).unwrap().dist;
        assert!((lit.probs()[2] - 0.6).abs() < 1e-12);
        let bal = foster_step(&s, FosterMixing::Balanced).unwrap().dist;
        assert!((bal.probs()[2] - 0.4).abs() < 1e-12);

        s.d[1] = 0.1;
        assert!(matches!(foster_step(&s, FosterMixing::Balanced), Err(Error::Internal(_))));
    }

    #[test]
    fn foster_probe_budget() {
        let eps = 1.0 / 16.0;
        let mut s = FosterState::new(eps).unwrap();
        assert_eq!(s.points.len(), 8);
        for cut in 0..8 {
            s.e.iter_mut().for_each(|v| *v = 0.0);
            s.d.iter_mut().for_each(|v| *v = 0.0);
            for l in 0..8 {
                if l < cut {
                    s.e[l] = 0.1;
                } else if l > 0 {
                    s.d[l] = 0.1;
                }
            }
            assert!(foster_step(&s, FosterMixing::Balanced).unwrap().probes <= 4);
        }
    }

    #[test]
    fn triangulation() {
        let g = line();
        assert_eq!(triangulation_round(&[0.5], &g).unwrap(), MixedAction::pure(3, 1));
        let w = triangulation_round(&[0.3], &g).unwrap();
        assert!((w.probs()[0] - 0.4).abs() < 1e-12 && (w.probs()[1] - 0.6).abs() < 1e-12);
        assert!(triangulation_round(&[1.2], &g).is_err());
    }

    #[test]
    fn borel_schedule() {
        let s = borel_doubling_schedule(1, 5).unwrap();
        assert!((s[3].0 - 0.5).abs() < 1e-12);
        assert!(s.iter().enumerate().all(|(k, &(_, len))| len == 1 << k));
        assert!(s.windows(2).all(|w| w[1].0 < w[0].0));
    }

    #[test]
    fn csv_header() {
        let g = line();
        let t = transcript(&g, &[(2, 1)]);
        let mut buf = Vec::new();
        t.write_csv(&g, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "stage,cell,prediction_coords,outcome\n1,2,1,1\n");
    }
}
