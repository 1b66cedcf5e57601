//! Finite two-player zero-sum games: the row player maximizes `x'ρy`.

use crate::error::{arg, check_dim, Error, Result};
use crate::geometry::MixedAction;

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarGame {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub value: f64,
    pub x: MixedAction,
    pub y: MixedAction,
}

impl ScalarGame {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return arg("empty payoff matrix");
        }
        check_dim(rows * cols, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return arg("payoff matrix has a non-finite entry");
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return arg("ragged payoff matrix");
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.cols + b]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// `ρ(a, y)` for every row `a`.
    pub fn row_payoffs(&self, y: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|a| (0..self.cols).map(|b| self.get(a, b) * y[b]).sum())
            .collect()
    }

    /// `ρ(x, b)` for every column `b`.
    pub fn col_payoffs(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for a in 0..self.rows {
            if x[a] != 0.0 {
                for (b, o) in out.iter_mut().enumerate() {
                    *o += x[a] * self.get(a, b);
                }
            }
        }
        out
    }

    /// The game seen by the column player as a maximizer: `−ρᵀ`.
    pub fn negated_transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for b in 0..self.cols {
            for a in 0..self.rows {
                data.push(-self.get(a, b));
            }
        }
        Self { rows: self.cols, cols: self.rows, data }
    }
}

/// Optimal strategies and value, certified by a duality gap of at most `2·eps`.
///
/// The matrix is rescaled to `[1, 2]` and the column player's program
/// `max Σy' s.t. ρ̂y' ≤ 1, y' ≥ 0` is solved with a tableau simplex under
/// Bland's rule; the row strategy is read off the slack reduced costs.
pub fn solve(game: &ScalarGame, eps: f64) -> Result<Solution> {
    if !(eps >= 0.0) {
        return arg(format!("eps must be nonnegative, got {eps}"));
    }
    let tol = eps.max(1e-12);
    let (lo, hi) = game
        .data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    if hi - lo <= 0.0 {
        return Ok(Solution {
            value: lo,
            x: MixedAction::uniform(game.rows),
            y: MixedAction::uniform(game.cols),
        });
    }
    let (x, y) = simplex_strategies(game, lo, hi - lo)?;
    let (lower, upper) = bounds(game, &x, &y);
    if upper - lower <= 2.0 * tol {
        return Ok(Solution { value: 0.5 * (lower + upper), x, y });
    }
    multiplicative_weights(game, tol)
}

fn bounds(game: &ScalarGame, x: &MixedAction, y: &MixedAction) -> (f64, f64) {
    let lower = game.col_payoffs(x.probs()).into_iter().fold(f64::INFINITY, f64::min);
    let upper = game.row_payoffs(y.probs()).into_iter().fold(f64::NEG_INFINITY, f64::max);
    (lower, upper)
}

fn simplex_strategies(game: &ScalarGame, lo: f64, span: f64) -> Result<(MixedAction, MixedAction)> {
    let (m, n) = (game.rows, game.cols);
    let width = n + m + 1;
    let mut t = vec![0.0; (m + 1) * width];
    for i in 0..m {
        for j in 0..n {
            t[i * width + j] = 1.0 + (game.get(i, j) - lo) / span;
        }
        t[i * width + n + i] = 1.0;
        t[i * width + width - 1] = 1.0;
    }
    for j in 0..n {
        t[m * width + j] = -1.0;
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    const PIV: f64 = 1e-12;
    let max_pivots = 50 * (m + n) * (m + n) + 1000;
    let mut pivots = 0;
    loop {
        let Some(col) = (0..n + m).find(|&j| t[m * width + j] < -PIV) else { break };
        let mut row = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            let a = t[i * width + col];
            if a > PIV {
                let r = t[i * width + width - 1] / a;
                let better = r < best - 1e-15
                    || ((r - best).abs() <= 1e-15 && row.is_some_and(|k: usize| basis[i] < basis[k]));
                if better {
                    best = r;
                    row = Some(i);
                }
            }
        }
        let Some(row) = row else {
            return Err(Error::Internal("unbounded program for a matrix game".into()));
        };
        let p = t[row * width + col];
        for v in &mut t[row * width..(row + 1) * width] {
            *v /= p;
        }
        for i in 0..=m {
            if i != row {
                let f = t[i * width + col];
                if f != 0.0 {
                    for j in 0..width {
                        t[i * width + j] -= f * t[row * width + j];
                    }
                }
            }
        }
        basis[row] = col;
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Numerical { what: "simplex pivoting", residual: f64::NAN });
        }
    }
    let mut yv = vec![0.0; n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            yv[b] = t[i * width + width - 1].max(0.0);
        }
    }
    let xv: Vec<f64> = (0..m).map(|i| t[m * width + n + i].max(0.0)).collect();
    Ok((MixedAction::from_weights(&xv)?, MixedAction::from_weights(&yv)?))
}

/// Hedge self-play with averaged iterates; used when the simplex certificate fails.
fn multiplicative_weights(game: &ScalarGame, tol: f64) -> Result<Solution> {
    let (m, n) = (game.rows, game.cols);
    let span = game.data.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    let mut sx = vec![0.0; m];
    let mut sy = vec![0.0; n];
    let mut ax = vec![0.0; m];
    let mut ay = vec![0.0; n];
    let mut best_gap = f64::INFINITY;
    let iterations = 200_000;
    for t in 1..=iterations {
        let eta = ((m.max(n) as f64).ln().max(1.0) / t as f64).sqrt() / span;
        let x = softmax(&sx, eta);
        let y = softmax(&sy.iter().map(|v| -v).collect::<Vec<_>>(), eta);
        for (a, v) in ax.iter_mut().zip(&x) {
            *a += v;
        }
        for (a, v) in ay.iter_mut().zip(&y) {
            *a += v;
        }
        for (s, v) in sx.iter_mut().zip(game.row_payoffs(&y)) {
            *s += v;
        }
        for (s, v) in sy.iter_mut().zip(game.col_payoffs(&x)) {
            *s += v;
        }
        if t % 1000 == 0 {
            let xm = MixedAction::from_weights(&ax)?;
            let ym = MixedAction::from_weights(&ay)?;
            let (lower, upper) = bounds(game, &xm, &ym);
            best_gap = best_gap.min(upper - lower);
            if upper - lower <= 2.0 * tol {
                return Ok(Solution { value: 0.5 * (lower + upper), x: xm, y: ym });
            }
        }
    }
    Err(Error::Numerical { what: "zero-sum solver", residual: best_gap })
}

fn softmax(scores: &[f64], eta: f64) -> Vec<f64> {
    let mx = scores.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
    let w: Vec<f64> = scores.iter().map(|s| (eta * (s - mx)).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// `(value − min_b x'ρ(·,b), max_a ρ(a,·)y − value)`.
pub fn exploitability(game: &ScalarGame, x: &MixedAction, y: &MixedAction) -> Result<(f64, f64)> {
    check_dim(game.rows, x.len())?;
    check_dim(game.cols, y.len())?;
    let value = solve(game, 1e-12)?.value;
    let (lower, upper) = bounds(game, x, y);
    Ok((value - lower, upper - value))
}
