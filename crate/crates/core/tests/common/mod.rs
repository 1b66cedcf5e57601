//! Brute-force references, written independently of the library's algorithms.

#![allow(dead_code)]

/// Solves a small dense system by Gaussian elimination; `None` when singular.
pub fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (1u32..(1 << n)).map(move |mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Projection onto the simplex by enumerating supports: on support `S`, `x_i = z_i − τ`.
pub fn simplex_by_supports(z: &[f64]) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for s in subsets(z.len()) {
        let tau = (s.iter().map(|&i| z[i]).sum::<f64>() - 1.0) / s.len() as f64;
        let mut x = vec![0.0; z.len()];
        for &i in &s {
            x[i] = z[i] - tau;
        }
        if x.iter().any(|v| *v < -1e-12) {
            continue;
        }
        let d = sq_dist(&x, z);
        if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
            best = Some((d, x));
        }
    }
    best.expect("some support is feasible").1
}

/// Projection onto `{z : ⟨w_k, z⟩ ≤ c_k}` by enumerating active sets.
pub fn polyhedron_by_active_sets(normals: &[Vec<f64>], offsets: &[f64], z: &[f64]) -> Vec<f64> {
    let feasible = |x: &[f64]| {
        normals.iter().zip(offsets).all(|(w, c)| w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() <= c + 1e-9)
    };
    if feasible(z) {
        return z.to_vec();
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for s in subsets(normals.len()) {
        if s.len() > z.len() {
            continue;
        }
        // x = z − Wᵀμ with W x = c on S
        let gram: Vec<Vec<f64>> = s
            .iter()
            .map(|&i| s.iter().map(|&j| normals[i].iter().zip(&normals[j]).map(|(a, b)| a * b).sum()).collect())
            .collect();
        let rhs: Vec<f64> = s
            .iter()
            .map(|&i| normals[i].iter().zip(z).map(|(a, b)| a * b).sum::<f64>() - offsets[i])
            .collect();
        let Some(mu) = gauss(gram, rhs) else { continue };
        let mut x = z.to_vec();
        for (k, &i) in s.iter().enumerate() {
            for (xv, w) in x.iter_mut().zip(&normals[i]) {
                *xv -= mu[k] * w;
            }
        }
        if feasible(&x) {
            let d = sq_dist(&x, z);
            if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
                best = Some((d, x));
            }
        }
    }
    best.expect("nonempty polyhedron").1
}

/// Box `[lo, hi]` as halfspaces.
pub fn box_halfspaces(lo: &[f64], hi: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let d = lo.len();
    let mut normals = Vec::new();
    let mut offsets = Vec::new();
    for i in 0..d {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        normals.push(e.clone());
        offsets.push(hi[i]);
        e[i] = -1.0;
        normals.push(e);
        offsets.push(-lo[i]);
    }
    (normals, offsets)
}

/// Value of a matrix game (row player maximizes) by support enumeration.
pub fn game_value_by_supports(a: &[Vec<f64>]) -> f64 {
    let (m, n) = (a.len(), a[0].len());
    for rows in subsets(m) {
        for cols in subsets(n).filter(|c| c.len() == rows.len()) {
            let k = rows.len();
            // x on rows equalizes the columns in `cols`
            let mut mx: Vec<Vec<f64>> = cols
                .iter()
                .map(|&j| rows.iter().map(|&i| a[i][j]).chain([-1.0]).collect())
                .collect();
            mx.push(vec![1.0; k].into_iter().chain([0.0]).collect());
            let mut bx = vec![0.0; k];
            bx.push(1.0);
            let mut my: Vec<Vec<f64>> = rows
                .iter()
                .map(|&i| cols.iter().map(|&j| a[i][j]).chain([-1.0]).collect())
                .collect();
            my.push(vec![1.0; k].into_iter().chain([0.0]).collect());
            let (Some(sx), Some(sy)) = (gauss(mx, bx.clone()), gauss(my, bx)) else { continue };
            let v = sx[k];
            if sx[..k].iter().chain(&sy[..k]).any(|p| *p < -1e-12) {
                continue;
            }
            let mut x = vec![0.0; m];
            for (t, &i) in rows.iter().enumerate() {
                x[i] = sx[t];
            }
            let mut y = vec![0.0; n];
            for (t, &j) in cols.iter().enumerate() {
                y[j] = sy[t];
            }
            let col_ok = (0..n).all(|j| (0..m).map(|i| x[i] * a[i][j]).sum::<f64>() >= v - 1e-9);
            let row_ok = (0..m).all(|i| (0..n).map(|j| a[i][j] * y[j]).sum::<f64>() <= v + 1e-9);
            if col_ok && row_ok {
                return v;
            }
        }
    }
    panic!("no equilibrium support found");
}

/// Invariant measure of a nonnegative irreducible matrix by power iteration on `I + M/c − diag(M1)/c`.
pub fn invariant_by_power(m: &[Vec<f64>]) -> Vec<f64> {
    let d = m.len();
    let c = 2.0 * m.iter().map(|r| r.iter().sum::<f64>()).fold(0.0, f64::max);
    let mut lambda = vec![1.0 / d as f64; d];
    for _ in 0..200_000 {
        let mut next = lambda.clone();
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    let flow = lambda[i] * m[i][j] / c;
                    next[i] -= flow;
                    next[j] += flow;
                }
            }
        }
        let change = next.iter().zip(&lambda).map(|(a, b)| (a - b).abs()).sum::<f64>();
        lambda = next;
        if change < 1e-16 {
            break;
        }
    }
    lambda
}
