//! The repeated-game loop, transcripts and Monte-Carlo aggregation.
//!
//! Randomness comes from one ChaCha8 stream per episode, seeded with
//! `ChaCha8Rng::seed_from_u64(seed)`. At each stage the player's draw (sampled
//! mode only) is consumed before Nature's draw (mixed Nature moves only).

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{arg, check_dim, Error, Result};
use crate::geometry::{dot, ConvexTarget, MixedAction};

/// Finite game with payoffs `g(a,b) ∈ R^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorGame {
    rows: usize,
    cols: usize,
    dim: usize,
    payoffs: Vec<f64>,
    norm: f64,
}

impl VectorGame {
    pub fn new(rows: usize, cols: usize, dim: usize, payoffs: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || dim == 0 {
            return arg("games need A, B, d ≥ 1");
        }
        check_dim(rows * cols * dim, payoffs.len())?;
        if payoffs.iter().any(|v| !v.is_finite()) {
            return arg("non-finite payoff");
        }
        let norm = payoffs
            .chunks(dim)
            .map(|g| dot(g, g).sqrt())
            .fold(0.0, f64::max);
        Ok(Self { rows, cols, dim, payoffs, norm })
    }

    pub fn from_fn(rows: usize, cols: usize, dim: usize, f: impl Fn(usize, usize) -> Vec<f64>) -> Result<Self> {
        let mut payoffs = Vec::with_capacity(rows * cols * dim);
        for a in 0..rows {
            for b in 0..cols {
                let g = f(a, b);
                check_dim(dim, g.len())?;
                payoffs.extend(g);
            }
        }
        Self::new(rows, cols, dim, payoffs)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `‖g‖∞ = max_{a,b} ‖g(a,b)‖₂`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn payoff(&self, a: usize, b: usize) -> &[f64] {
        let i = (a * self.cols + b) * self.dim;
        &self.payoffs[i..i + self.dim]
    }

    pub fn payoff_xb(&self, x: &[f64], b: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (a, p) in x.iter().enumerate() {
            if *p != 0.0 {
                for (o, g) in out.iter_mut().zip(self.payoff(a, b)) {
                    *o += p * g;
                }
            }
        }
        out
    }

    pub fn payoff_xy(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (b, q) in y.iter().enumerate() {
            if *q != 0.0 {
                for (o, g) in out.iter_mut().zip(self.payoff_xb(x, b)) {
                    *o += q * g;
                }
            }
        }
        out
    }

    /// Hex SHA-256 of the shape and little-endian payoff bytes.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for n in [self.rows, self.cols, self.dim] {
            h.update((n as u64).to_le_bytes());
        }
        for v in &self.payoffs {
            h.update(v.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Stage durations `ω(a,b) ∈ [low, high] ⊂ (0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct StageWeights {
    low: f64,
    high: f64,
    cols: usize,
    table: Vec<f64>,
}

impl StageWeights {
    pub fn new(low: f64, high: f64, rows: usize, cols: usize, table: Vec<f64>) -> Result<Self> {
        if !(low > 0.0 && low <= high && high <= 1.0) {
            return arg(format!("weight range [{low}, {high}] must lie in (0, 1]"));
        }
        check_dim(rows * cols, table.len())?;
        if let Some(w) = table.iter().find(|w| !(**w >= low && **w <= high)) {
            return arg(format!("stage weight {w} outside [{low}, {high}]"));
        }
        Ok(Self { low, high, cols, table })
    }

    pub fn unit(rows: usize, cols: usize) -> Self {
        Self { low: 1.0, high: 1.0, cols, table: vec![1.0; rows * cols] }
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.table[a * self.cols + b]
    }
    pub fn low(&self) -> f64 {
        self.low
    }
    pub fn high(&self) -> f64 {
        self.high
    }
}

/// Coordinates active at `(a,b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Activation {
    cols: usize,
    dim: usize,
    table: Vec<bool>,
}

impl Activation {
    pub fn new(rows: usize, cols: usize, dim: usize, table: Vec<bool>) -> Result<Self> {
        check_dim(rows * cols * dim, table.len())?;
        Ok(Self { cols, dim, table })
    }

    pub fn all(rows: usize, cols: usize, dim: usize) -> Self {
        Self { cols, dim, table: vec![true; rows * cols * dim] }
    }

    pub fn get(&self, a: usize, b: usize) -> &[bool] {
        let i = (a * self.cols + b) * self.dim;
        &self.table[i..i + self.dim]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sampled,
    Expected,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Averaging {
    Cesaro,
    Weighted,
    Activated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageRecord {
    /// Realized action; `None` in expected mode.
    pub player_action: Option<usize>,
    pub player_mixed: Vec<f64>,
    pub nature_action: usize,
    pub nature_mixed: Vec<f64>,
    pub payoff: Vec<f64>,
    pub weight: f64,
    pub activation: Vec<bool>,
}

/// What strategies get to see before choosing stage `stage + 1`.
pub struct HistoryView<'a> {
    pub game: &'a VectorGame,
    pub stage: usize,
    pub sum: &'a [f64],
    pub average: &'a [f64],
    pub last: Option<&'a StageRecord>,
    pub player_counts: &'a [usize],
    pub nature_counts: &'a [usize],
}

pub trait Strategy: Send {
    fn next(&mut self, view: &HistoryView<'_>) -> Result<MixedAction>;
    fn reset(&mut self) {}
    fn horizon_hint(&mut self, _n: usize) {}
}

pub enum NatureMove {
    Pure(usize),
    Mixed(MixedAction),
}

pub trait Nature: Send {
    /// `current` is the player's mixed action for this stage; it is a function
    /// of the history, so an adversary may legitimately know it.
    fn next(&mut self, view: &HistoryView<'_>, current: &MixedAction) -> Result<NatureMove>;
    fn reset(&mut self) {}
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    pub seed: u64,
    pub mode: Mode,
    pub dim: usize,
    pub game_hash: String,
    pub stages: Vec<StageRecord>,
    pub sum: Vec<f64>,
    pub weighted_sum: Vec<f64>,
    pub weight_total: f64,
    pub activated_sum: Vec<f64>,
    pub activation_counts: Vec<usize>,
}

impl Transcript {
    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// Running averages after each stage `n = 1..=len`.
    pub fn averages(&self, averaging: Averaging) -> Vec<Vec<f64>> {
        let d = self.dim;
        let mut out = Vec::with_capacity(self.len());
        let mut sum = vec![0.0; d];
        let mut wsum = vec![0.0; d];
        let mut wtot = 0.0;
        let mut asum = vec![0.0; d];
        let mut acount = vec![0usize; d];
        for (i, s) in self.stages.iter().enumerate() {
            accumulate(s, &mut sum, &mut wsum, &mut wtot, &mut asum, &mut acount);
            out.push(match averaging {
                Averaging::Cesaro => sum.iter().map(|v| v / (i + 1) as f64).collect(),
                Averaging::Weighted => wsum.iter().map(|v| v / wtot).collect(),
                Averaging::Activated => activated(&asum, &acount),
            });
        }
        out
    }

    pub fn final_average(&self, averaging: Averaging) -> Vec<f64> {
        let n = self.len();
        if n == 0 {
            return vec![0.0; self.dim];
        }
        match averaging {
            Averaging::Cesaro => self.sum.iter().map(|v| v / n as f64).collect(),
            Averaging::Weighted => self.weighted_sum.iter().map(|v| v / self.weight_total).collect(),
            Averaging::Activated => activated(&self.activated_sum, &self.activation_counts),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["stage".to_string(), "player_action".into(), "nature_action".into()];
        header.extend((0..self.dim).map(|k| format!("payoff_{k}")));
        header.push("weight".into());
        w.write_record(&header).map_err(io_err)?;
        for (i, s) in self.stages.iter().enumerate() {
            let mut rec = vec![
                (i + 1).to_string(),
                s.player_action.map(|a| a.to_string()).unwrap_or_default(),
                s.nature_action.to_string(),
            ];
            rec.extend(s.payoff.iter().map(|v| v.to_string()));
            rec.push(s.weight.to_string());
            w.write_record(&rec).map_err(io_err)?;
        }
        w.flush().map_err(|e| Error::Argument(e.to_string()))
    }

    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "seed": self.seed,
            "mode": self.mode,
            "game_hash": self.game_hash,
            "stages": self.len(),
            "dim": self.dim,
        })
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn export(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Argument(e.to_string()))?;
        let f = std::fs::File::create(dir.join(format!("{stem}.csv"))).map_err(|e| Error::Argument(e.to_string()))?;
        self.write_csv(std::io::BufWriter::new(f))?;
        let meta = serde_json::to_string_pretty(&self.metadata()).map_err(|e| Error::Argument(e.to_string()))?;
        std::fs::write(dir.join(format!("{stem}.json")), meta).map_err(|e| Error::Argument(e.to_string()))
    }
}

fn io_err(e: csv::Error) -> Error {
    Error::Argument(format!("csv: {e}"))
}

fn activated(sum: &[f64], count: &[usize]) -> Vec<f64> {
    sum.iter()
        .zip(count)
        .map(|(s, c)| if *c == 0 { 0.0 } else { s / *c as f64 })
        .collect()
}

fn accumulate(
    s: &StageRecord,
    sum: &mut [f64],
    wsum: &mut [f64],
    wtot: &mut f64,
    asum: &mut [f64],
    acount: &mut [usize],
) {
    for k in 0..sum.len() {
        sum[k] += s.payoff[k];
        wsum[k] += s.weight * s.payoff[k];
        if s.activation[k] {
            asum[k] += s.payoff[k];
            acount[k] += 1;
        }
    }
    *wtot += s.weight;
}

#[derive(Clone, Debug)]
pub struct Episode<'a> {
    pub game: &'a VectorGame,
    pub stages: usize,
    pub seed: u64,
    pub mode: Mode,
    pub weights: Option<&'a StageWeights>,
    pub activation: Option<&'a Activation>,
}

impl<'a> Episode<'a> {
    pub fn new(game: &'a VectorGame, stages: usize, seed: u64, mode: Mode) -> Self {
        Self { game, stages, seed, mode, weights: None, activation: None }
    }
}

pub fn run_episode(ep: &Episode<'_>, player: &mut dyn Strategy, nature: &mut dyn Nature) -> Result<Transcript> {
    let game = ep.game;
    let d = game.dim();
    if let Some(a) = ep.activation {
        check_dim(d, a.dim())?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ep.seed);
    player.reset();
    nature.reset();
    player.horizon_hint(ep.stages);
    let mut stages: Vec<StageRecord> = Vec::with_capacity(ep.stages);
    let mut sum = vec![0.0; d];
    let mut average = vec![0.0; d];
    let mut wsum = vec![0.0; d];
    let mut wtot = 0.0;
    let mut asum = vec![0.0; d];
    let mut acount = vec![0usize; d];
    let mut player_counts = vec![0usize; game.rows()];
    let mut nature_counts = vec![0usize; game.cols()];
    for m in 1..=ep.stages {
        let view = HistoryView {
            game,
            stage: m - 1,
            sum: &sum,
            average: &average,
            last: stages.last(),
            player_counts: &player_counts,
            nature_counts: &nature_counts,
        };
        let x = player.next(&view)?;
        if x.len() != game.rows() {
            return Err(Error::Protocol {
                stage: m,
                msg: format!("player returned {} probabilities for {} actions", x.len(), game.rows()),
            });
        }
        MixedAction::new(x.probs().to_vec())
            .map_err(|e| Error::Protocol { stage: m, msg: format!("invalid player action: {e}") })?;
        let mv = nature.next(&view, &x)?;
        let a = match ep.mode {
            Mode::Sampled => Some(x.sample(rng.gen::<f64>())),
            Mode::Expected => None,
        };
        let (b, y) = match mv {
            NatureMove::Pure(b) if b < game.cols() => (b, MixedAction::pure(game.cols(), b).into_vec()),
            NatureMove::Pure(b) => {
                return Err(Error::Protocol { stage: m, msg: format!("nature action {b} out of range") })
            }
            NatureMove::Mixed(y) => {
                if y.len() != game.cols() {
                    return Err(Error::Protocol { stage: m, msg: "nature mixed action has wrong length".into() });
                }
                (y.sample(rng.gen::<f64>()), y.into_vec())
            }
        };
        let payoff = match a {
            Some(a) => game.payoff(a, b).to_vec(),
            None => game.payoff_xb(x.probs(), b),
        };
        let (weight, activation) = match a {
            Some(a) => (
                ep.weights.map_or(1.0, |w| w.get(a, b)),
                ep.activation.map_or_else(|| vec![true; d], |c| c.get(a, b).to_vec()),
            ),
            None => {
                if ep.weights.is_some() || ep.activation.is_some() {
                    return Err(Error::Unsupported(
                        "stage weights and activations need realized actions (sampled mode)".into(),
                    ));
                }
                (1.0, vec![true; d])
            }
        };
        let rec = StageRecord {
            player_action: a,
            player_mixed: x.into_vec(),
            nature_action: b,
            nature_mixed: y,
            payoff,
            weight,
            activation,
        };
        accumulate(&rec, &mut sum, &mut wsum, &mut wtot, &mut asum, &mut acount);
        for k in 0..d {
            average[k] = sum[k] / m as f64;
        }
        if let Some(a) = a {
            player_counts[a] += 1;
        }
        nature_counts[b] += 1;
        stages.push(rec);
    }
    Ok(Transcript {
        seed: ep.seed,
        mode: ep.mode,
        dim: d,
        game_hash: game.hash(),
        stages,
        sum,
        weighted_sum: wsum,
        weight_total: wtot,
        activated_sum: asum,
        activation_counts: acount,
    })
}

/// `(n, d_target(average at n))` for every `n = 1..=len`.
pub fn metric_series(t: &Transcript, target: &ConvexTarget, averaging: Averaging) -> Result<Vec<(usize, f64)>> {
    check_dim(target.dim(), t.dim)?;
    t.averages(averaging)
        .iter()
        .enumerate()
        .map(|(i, avg)| Ok((i + 1, target.distance(avg)?)))
        .collect()
}

/// Distances at selected stages only (1-based).
pub fn metric_at(t: &Transcript, target: &ConvexTarget, averaging: Averaging, at: &[usize]) -> Result<Vec<f64>> {
    check_dim(target.dim(), t.dim)?;
    let avgs = t.averages(averaging);
    at.iter()
        .map(|&n| {
            if n == 0 || n > avgs.len() {
                return arg(format!("stage {n} outside transcript of length {}", avgs.len()));
            }
            target.distance(&avgs[n - 1])
        })
        .collect()
}

/// `ε_n = ⟨ḡ_n − Π(ḡ_n), g(x_{n+1}, y_{n+1}) − Π(ḡ_n)⟩` for `n = 1..len−1`.
pub fn blackwell_slack(t: &Transcript, game: &VectorGame, target: &ConvexTarget) -> Result<Vec<f64>> {
    if t.mode != Mode::Expected {
        return Err(Error::Unsupported("Blackwell slack needs an expected-mode transcript".into()));
    }
    check_dim(target.dim(), t.dim)?;
    check_dim(game.dim(), t.dim)?;
    let avgs = t.averages(Averaging::Cesaro);
    let mut out = Vec::with_capacity(t.len().saturating_sub(1));
    for n in 1..t.len() {
        let avg = &avgs[n - 1];
        let pr = target.project(avg)?;
        if pr.dist == 0.0 {
            out.push(0.0);
            continue;
        }
        let next = &t.stages[n];
        let g = game.payoff_xy(&next.player_mixed, &next.nature_mixed);
        let s: f64 = (0..t.dim).map(|k| (avg[k] - pr.pi[k]) * (g[k] - pr.pi[k])).sum();
        out.push(s);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub trials: usize,
    pub base_seed: u64,
    /// Worker threads; `None` reads `APPROACHLAB_THREADS`, then falls back to rayon's default.
    pub threads: Option<usize>,
}

impl MonteCarlo {
    pub fn new(trials: usize, base_seed: u64) -> Self {
        Self { trials, base_seed, threads: None }
    }
}

/// Per-index statistics over trials.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesStats {
    pub trials: usize,
    pub mean: Vec<f64>,
    /// Sample standard deviation (0 for a single trial).
    pub std: Vec<f64>,
    pub max: Vec<f64>,
}

impl SeriesStats {
    pub fn stderr(&self, i: usize) -> f64 {
        self.std[i] / (self.trials as f64).sqrt()
    }
}

pub fn thread_count(requested: Option<usize>) -> usize {
    requested
        .or_else(|| std::env::var("APPROACHLAB_THREADS").ok().and_then(|v| v.parse().ok()))
        .filter(|n| *n > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

/// Runs `metric(seed)` for seeds `base_seed + i` and aggregates the series.
pub fn monte_carlo<F>(mc: &MonteCarlo, metric: F) -> Result<SeriesStats>
where
    F: Fn(u64) -> Result<Vec<f64>> + Sync,
{
    if mc.trials == 0 {
        return arg("monte carlo needs at least one trial");
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(mc.threads))
        .build()
        .map_err(|e| Error::Argument(e.to_string()))?;
    let results: Vec<Result<Vec<f64>>> = pool.install(|| {
        (0..mc.trials)
            .into_par_iter()
            .map(|i| {
                let seed = mc.base_seed.wrapping_add(i as u64);
                metric(seed).map_err(|e| Error::Episode { seed, source: Box::new(e) })
            })
            .collect()
    });
    let series: Vec<Vec<f64>> = results.into_iter().collect::<Result<_>>()?;
    aggregate(&series)
}

pub fn aggregate(series: &[Vec<f64>]) -> Result<SeriesStats> {
    let trials = series.len();
    if trials == 0 {
        return arg("nothing to aggregate");
    }
    let len = series[0].len();
    if series.iter().any(|s| s.len() != len) {
        return arg("series of unequal length");
    }
    let mut mean = vec![0.0; len];
    let mut max = vec![f64::NEG_INFINITY; len];
    for s in series {
        for i in 0..len {
            mean[i] += s[i];
            max[i] = max[i].max(s[i]);
        }
    }
    mean.iter_mut().for_each(|m| *m /= trials as f64);
    let mut std = vec![0.0; len];
    if trials > 1 {
        for s in series {
            for i in 0..len {
                std[i] += (s[i] - mean[i]).powi(2);
            }
        }
        std.iter_mut().for_each(|v| *v = (*v / (trials - 1) as f64).sqrt());
    }
    Ok(SeriesStats { trials, mean, std, max })
}

/// Nature playing one fixed action.
pub struct FixedNature(pub usize);

impl Nature for FixedNature {
    fn next(&mut self, _: &HistoryView<'_>, _: &MixedAction) -> Result<NatureMove> {
        Ok(NatureMove::Pure(self.0))
    }
}

/// I.i.d. draws from a fixed law.
pub struct IidNature(pub MixedAction);

impl Nature for IidNature {
    fn next(&mut self, _: &HistoryView<'_>, _: &MixedAction) -> Result<NatureMove> {
        Ok(NatureMove::Mixed(self.0.clone()))
    }
}

/// Replays a script, cycling when it runs out.
pub struct ScriptedNature(pub Vec<usize>);

impl Nature for ScriptedNature {
    fn next(&mut self, view: &HistoryView<'_>, _: &MixedAction) -> Result<NatureMove> {
        if self.0.is_empty() {
            return arg("empty script");
        }
        Ok(NatureMove::Pure(self.0[view.stage % self.0.len()]))
    }
}

/// Pushes the average away from the target: picks `b` maximizing
/// `⟨g(x_last, b) − Π(ḡ), ḡ − Π(ḡ)⟩`, or a fixed action while the average is inside.
pub struct AwayNature {
    pub target: ConvexTarget,
}

impl Nature for AwayNature {
    fn next(&mut self, view: &HistoryView<'_>, _: &MixedAction) -> Result<NatureMove> {
        let Some(last) = view.last else { return Ok(NatureMove::Pure(0)) };
        let pr = self.target.project(view.average)?;
        let normal: Vec<f64> = view.average.iter().zip(&pr.pi).map(|(a, p)| a - p).collect();
        let mut best = (0, f64::NEG_INFINITY);
        for b in 0..view.game.cols() {
            let g = view.game.payoff_xb(&last.player_mixed, b);
            let s: f64 = g.iter().zip(&pr.pi).zip(&normal).map(|((g, p), n)| (g - p) * n).sum();
            if s > best.1 + 1e-15 {
                best = (b, s);
            }
        }
        Ok(NatureMove::Pure(best.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(MixedAction);
    impl Strategy for Fixed {
        fn next(&mut self, _: &HistoryView<'_>) -> Result<MixedAction> {
            Ok(self.0.clone())
        }
    }

    fn coin() -> VectorGame {
        VectorGame::new(2, 1, 1, vec![-1.0, 1.0]).unwrap()
    }

    #[test]
    fn single_stage_average_is_the_payoff() {
        let g = VectorGame::new(2, 2, 2, (0..8).map(f64::from).collect()).unwrap();
        let t = run_episode(&Episode::new(&g, 1, 3, Mode::Sampled), &mut Fixed(MixedAction::pure(2, 1)), &mut FixedNature(0))
            .unwrap();
        assert_eq!(t.final_average(Averaging::Cesaro), vec![4.0, 5.0]);
    }

    #[test]
    fn seeds_reproduce() {
        let g = coin();
        let run = |seed| {
            run_episode(
                &Episode::new(&g, 50, seed, Mode::Sampled),
                &mut Fixed(MixedAction::uniform(2)),
                &mut FixedNature(0),
            )
            .unwrap()
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9), run(10));
    }

    #[test]
    fn metric_series_examples() {
        let g = VectorGame::new(2, 1, 1, vec![-1.0, 1.0]).unwrap();
        let origin = ConvexTarget::singleton(vec![0.0]).unwrap();
        let alternate = ScriptedNature(vec![0]);
        let mut p = Alternating(0);
        let t = run_episode(&Episode::new(&g, 6, 0, Mode::Sampled), &mut p, &mut { alternate }).unwrap();
        let s = metric_series(&t, &origin, Averaging::Cesaro).unwrap();
        for (n, d) in s {
            if n % 2 == 0 {
                assert_eq!(d, 0.0);
            }
        }
        let inside = ConvexTarget::boxed(vec![-2.0], vec![2.0]).unwrap();
        assert!(metric_series(&t, &inside, Averaging::Cesaro).unwrap().iter().all(|(_, d)| *d == 0.0));
        let far = ConvexTarget::singleton(vec![3.0]).unwrap();
        let c = VectorGame::new(1, 1, 1, vec![1.0]).unwrap();
        let t = run_episode(&Episode::new(&c, 5, 0, Mode::Sampled), &mut Fixed(MixedAction::uniform(1)), &mut FixedNature(0))
            .unwrap();
        assert!(metric_series(&t, &far, Averaging::Cesaro).unwrap().iter().all(|(_, d)| *d == 2.0));
    }

    struct Alternating(usize);
    impl Strategy for Alternating {
        fn next(&mut self, _: &HistoryView<'_>) -> Result<MixedAction> {
            self.0 += 1;
            Ok(MixedAction::pure(2, self.0 % 2))
        }
        fn reset(&mut self) {
            self.0 = 0;
        }
    }

    #[test]
    fn slack_detects_drift() {
        let g = VectorGame::new(1, 2, 1, vec![0.0, 1.0]).unwrap();
        let origin = ConvexTarget::singleton(vec![0.0]).unwrap();
        let t = run_episode(&Episode::new(&g, 5, 0, Mode::Expected), &mut Fixed(MixedAction::uniform(1)), &mut FixedNature(1))
            .unwrap();
        let eps = blackwell_slack(&t, &g, &origin).unwrap();
        assert!(eps.iter().any(|e| *e > 0.0));
        let sampled = run_episode(&Episode::new(&g, 5, 0, Mode::Sampled), &mut Fixed(MixedAction::uniform(1)), &mut FixedNature(1))
            .unwrap();
        assert!(matches!(blackwell_slack(&sampled, &g, &origin), Err(Error::Unsupported(_))));
    }

    #[test]
    fn invalid_player_action_names_the_stage() {
        struct Bad;
        impl Strategy for Bad {
            fn next(&mut self, v: &HistoryView<'_>) -> Result<MixedAction> {
                Ok(MixedAction::uniform(if v.stage == 2 { 3 } else { 2 }))
            }
        }
        let err = run_episode(&Episode::new(&coin(), 5, 0, Mode::Sampled), &mut Bad, &mut FixedNature(0)).unwrap_err();
        assert!(matches!(err, Error::Protocol { stage: 3, .. }));
    }

    #[test]
    fn monte_carlo_basics() {
        let single = monte_carlo(&MonteCarlo::new(1, 5), |s| Ok(vec![s as f64, 2.0])).unwrap();
        assert_eq!(single.mean, vec![5.0, 2.0]);
        let constant = monte_carlo(&MonteCarlo::new(7, 0), |_| Ok(vec![1.5])).unwrap();
        assert_eq!(constant.std, vec![0.0]);
        let failing = monte_carlo(&MonteCarlo::new(4, 10), |s| if s == 12 { arg("boom") } else { Ok(vec![0.0]) });
        assert!(matches!(failing, Err(Error::Episode { seed: 12, .. })));
    }

    #[test]
    fn csv_header_and_rows() {
        let g = coin();
        let t = run_episode(&Episode::new(&g, 2, 1, Mode::Expected), &mut Fixed(MixedAction::uniform(2)), &mut FixedNature(0))
            .unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("stage,player_action,nature_action,payoff_0,weight"));
        assert_eq!(lines.next(), Some("1,,0,0,1"));
    }
}
