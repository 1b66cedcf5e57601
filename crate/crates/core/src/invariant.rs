//! Invariant measures of nonnegative matrices and stationary laws of Markov chains.
//!
//! Both reduce to the continuous-time chain with off-diagonal rates `M_ij`.
//! Its recurrent classes are found by reachability, each class gets its unique
//! stationary law from a direct linear solve, and classes are mixed with the
//! absorption probabilities seen from the uniform start. That is the limit the
//! uniformized power iteration converges to, computed without the slow mixing;
//! the lazy power iteration remains as a fallback if the residual check fails.

use crate::error::{arg, Error, Result};
use crate::geometry::MixedAction;

const RESIDUAL_TOL: f64 = 1e-8;
const POWER_MAX_ITERS: usize = 1_000_000;

fn validate_square(m: &[Vec<f64>]) -> Result<usize> {
    let d = m.len();
    if d == 0 {
        return arg("empty matrix");
    }
    for row in m {
        if row.len() != d {
            return arg("matrix is not square");
        }
        if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return arg("matrix entries must be finite and nonnegative");
        }
    }
    Ok(d)
}

/// `λ ∈ Δ(d)` with `Σ_k λ_k M_{k,i} = λ_i Σ_k M_{i,k}` for every `i`.
pub fn invariant_measure(m: &[Vec<f64>]) -> Result<MixedAction> {
    let d = validate_square(m)?;
    let scale = m.iter().flatten().fold(1.0f64, |s, v| s.max(*v));
    match from_rates(m) {
        Ok(lambda) if balance_residual(m, lambda.probs()) <= RESIDUAL_TOL * scale => return Ok(lambda),
        Ok(_) | Err(Error::Numerical { .. }) => {}
        Err(e) => return Err(e),
    }
    let c = m.iter().map(|r| r.iter().sum::<f64>()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let p: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let s: f64 = m[i].iter().sum();
            (0..d)
                .map(|j| if i == j { (m[i][i] + c - s) / c } else { m[i][j] / c })
                .collect()
        })
        .collect();
    power_iteration(&p)
}

/// `λ` with `λᵀP = λᵀ` for a row-stochastic `P`.
pub fn stationary(p: &[Vec<f64>]) -> Result<MixedAction> {
    validate_square(p)?;
    for row in p {
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return arg(format!("row sums to {s}, not 1"));
        }
    }
    match from_rates(p) {
        Ok(lambda) if stationary_residual(p, lambda.probs()) <= RESIDUAL_TOL => return Ok(lambda),
        Ok(_) | Err(Error::Numerical { .. }) => {}
        Err(e) => return Err(e),
    }
    power_iteration(p)
}

/// `max_i |Σ_k λ_k M_{k,i} − λ_i Σ_k M_{i,k}|`.
pub fn balance_residual(m: &[Vec<f64>], lambda: &[f64]) -> f64 {
    let d = m.len();
    (0..d)
        .map(|i| {
            let inflow: f64 = (0..d).map(|k| lambda[k] * m[k][i]).sum();
            let out: f64 = m[i].iter().sum::<f64>() * lambda[i];
            (inflow - out).abs()
        })
        .fold(0.0, f64::max)
}

pub fn stationary_residual(p: &[Vec<f64>], lambda: &[f64]) -> f64 {
    let d = p.len();
    (0..d)
        .map(|i| ((0..d).map(|k| lambda[k] * p[k][i]).sum::<f64>() - lambda[i]).abs())
        .fold(0.0, f64::max)
}

/// Whether the off-diagonal support graph is strongly connected.
pub fn is_irreducible(m: &[Vec<f64>]) -> bool {
    let reach = reachability(m);
    reach.iter().all(|r| r.iter().all(|&b| b))
}

fn reachability(m: &[Vec<f64>]) -> Vec<Vec<bool>> {
    let d = m.len();
    let mut reach = vec![vec![false; d]; d];
    for (s, row) in reach.iter_mut().enumerate() {
        let mut stack = vec![s];
        row[s] = true;
        while let Some(i) = stack.pop() {
            for j in 0..d {
                if j != i && m[i][j] > 0.0 && !row[j] {
                    row[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    reach
}

fn from_rates(raw: &[Vec<f64>]) -> Result<MixedAction> {
    let d = raw.len();
    let top = raw.iter().flatten().fold(0.0f64, |s, v| s.max(*v));
    let scale = if top > 0.0 { 1.0 / top } else { 1.0 };
    let scaled: Vec<Vec<f64>> = raw.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect();
    let m = &scaled[..];
    let reach = reachability(m);
    let mut class_of = vec![usize::MAX; d];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..d {
        if class_of[i] != usize::MAX {
            continue;
        }
        let members: Vec<usize> = (0..d).filter(|&j| reach[i][j] && reach[j][i]).collect();
        for &j in &members {
            class_of[j] = classes.len();
        }
        classes.push(members);
    }
    let recurrent: Vec<usize> = (0..classes.len())
        .filter(|&c| classes[c].iter().all(|&i| (0..d).all(|j| !reach[i][j] || class_of[j] == c)))
        .collect();
    let transient: Vec<usize> =
        (0..d).filter(|&i| !recurrent.contains(&class_of[i])).collect();

    let out_rate = |i: usize| -> f64 { (0..d).filter(|&j| j != i).map(|j| m[i][j]).sum() };

    // absorption probabilities of transient states into each recurrent class
    let t = transient.len();
    let k = recurrent.len();
    let mut absorb = vec![0.0; t * k];
    if t > 0 {
        let mut a = vec![0.0; t * t];
        let mut b = vec![0.0; t * k];
        for (r, &i) in transient.iter().enumerate() {
            a[r * t + r] = out_rate(i);
            for (c, &j) in transient.iter().enumerate() {
                if c != r {
                    a[r * t + c] -= m[i][j];
                }
            }
            for (q, &cls) in recurrent.iter().enumerate() {
                b[r * k + q] = classes[cls].iter().map(|&j| m[i][j]).sum();
            }
        }
        absorb = solve_linear(a, b, t, k)?;
    }

    let mut lambda = vec![0.0; d];
    for (q, &cls) in recurrent.iter().enumerate() {
        let members = &classes[cls];
        let mass = (members.len() as f64 + (0..t).map(|r| absorb[r * k + q]).sum::<f64>()) / d as f64;
        let pi = class_stationary(m, members)?;
        for (&i, v) in members.iter().zip(pi) {
            lambda[i] += mass * v;
        }
    }
    lambda.iter_mut().for_each(|v| *v = v.max(0.0));
    MixedAction::from_weights(&lambda)
}

/// Unique stationary law of an irreducible class: `πQ = 0`, `Σπ = 1`.
fn class_stationary(m: &[Vec<f64>], members: &[usize]) -> Result<Vec<f64>> {
    let n = members.len();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    // rows are equations j, columns unknowns i: Σ_i π_i Q_{ij} = 0
    let mut a = vec![0.0; n * n];
    for (c, &i) in members.iter().enumerate() {
        let mut out = 0.0;
        for (r, &j) in members.iter().enumerate() {
            if i != j {
                a[r * n + c] = m[i][j];
                out += m[i][j];
            }
        }
        a[c * n + c] = -out;
    }
    for c in 0..n {
        a[(n - 1) * n + c] = 1.0;
    }
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;
    solve_linear(a, b, n, 1)
}

/// Solves a dense square system `A x = b`.
pub(crate) fn solve_dense(a: Vec<f64>, b: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    let x = solve_linear(a, b, n, 1)?;
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::Numerical { what: "linear solve", residual: f64::NAN })
    }
}

/// Gaussian elimination with partial pivoting for `A X = B`, `A` n×n, `B` n×k.
fn solve_linear(mut a: Vec<f64>, mut b: Vec<f64>, n: usize, k: usize) -> Result<Vec<f64>> {
    let max_abs = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))
            .unwrap_or(col);
        if a[piv * n + col].abs() < 1e-13 * max_abs {
            return Err(Error::Numerical { what: "linear solve", residual: a[piv * n + col].abs() });
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            for j in 0..k {
                b.swap(col * k + j, piv * k + j);
            }
        }
        let p = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / p;
            if f != 0.0 {
                for j in col..n {
                    a[r * n + j] -= f * a[col * n + j];
                }
                for j in 0..k {
                    b[r * k + j] -= f * b[col * k + j];
                }
            }
        }
    }
    let mut x = vec![0.0; n * k];
    for r in (0..n).rev() {
        for j in 0..k {
            let s: f64 = (r + 1..n).map(|c| a[r * n + c] * x[c * k + j]).sum();
            x[r * k + j] = (b[r * k + j] - s) / a[r * n + r];
        }
    }
    Ok(x)
}

fn power_iteration(p: &[Vec<f64>]) -> Result<MixedAction> {
    let d = p.len();
    let mut lambda = vec![1.0 / d as f64; d];
    let mut next = vec![0.0; d];
    let step = |lambda: &[f64], next: &mut [f64], damping: f64| {
        for i in 0..d {
            let flow: f64 = (0..d).map(|k| lambda[k] * p[k][i]).sum();
            next[i] = damping * 0.5 * (flow + lambda[i]) + (1.0 - damping) / d as f64;
        }
    };
    for _ in 0..POWER_MAX_ITERS / 2 {
        step(&lambda, &mut next, 0.999);
        let change = lambda.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        lambda.copy_from_slice(&next);
        if change < 1e-15 {
            break;
        }
    }
    for _ in 0..POWER_MAX_ITERS / 2 {
        step(&lambda, &mut next, 1.0);
        lambda.copy_from_slice(&next);
        if stationary_residual(p, &lambda) <= RESIDUAL_TOL {
            return MixedAction::from_weights(&lambda);
        }
    }
    Err(Error::Numerical { what: "power iteration", residual: stationary_residual(p, &lambda) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn invariant_measure_examples() {
        let swap = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert!(close(invariant_measure(&swap).unwrap().probs(), &[0.5, 0.5]));
        let skew = vec![vec![0.0, 2.0], vec![1.0, 0.0]];
        assert!(close(invariant_measure(&skew).unwrap().probs(), &[1.0 / 3.0, 2.0 / 3.0]));
        let id = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert!(close(invariant_measure(&id).unwrap().probs(), &[1.0 / 3.0; 3]));
        let zero = vec![vec![0.0; 4]; 4];
        assert!(close(invariant_measure(&zero).unwrap().probs(), &[0.25; 4]));
        let flow = vec![vec![0.0, 1.0], vec![0.0, 0.0]];
        assert!(close(invariant_measure(&flow).unwrap().probs(), &[0.0, 1.0]));
    }

    #[test]
    fn stationary_examples() {
        let ds = vec![vec![0.2, 0.8], vec![0.8, 0.2]];
        assert!(close(stationary(&ds).unwrap().probs(), &[0.5, 0.5]));
        let absorbing = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        assert!(close(stationary(&absorbing).unwrap().probs(), &[1.0, 0.0]));
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(close(stationary(&id).unwrap().probs(), &[0.5, 0.5]));
    }

    #[test]
    fn transient_mass_splits_by_absorption() {
        // state 0 feeds the absorbing states 1 and 2 at rates 1 and 3
        let m = vec![vec![0.0, 1.0, 3.0], vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]];
        let l = invariant_measure(&m).unwrap();
        assert!(close(l.probs(), &[0.0, (1.0 + 0.25) / 3.0, (1.0 + 0.75) / 3.0]));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(invariant_measure(&[vec![0.0, -1.0], vec![0.0, 0.0]]).is_err());
        assert!(stationary(&[vec![0.5, 0.4], vec![0.0, 1.0]]).is_err());
    }
}
