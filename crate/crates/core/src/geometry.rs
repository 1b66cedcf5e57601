//! Convex targets, Euclidean projections, simplex utilities and forecast grids.

use std::collections::HashMap;

use crate::error::{arg, check_dim, Error, Result};

const DYKSTRA_TOL: f64 = 1e-10;
const DYKSTRA_MAX_SWEEPS: usize = 10_000;
const MEMBERSHIP_TOL: f64 = 1e-9;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// A probability vector over a finite index set.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedAction(Vec<f64>);

impl MixedAction {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return arg("mixed action over an empty set");
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return arg(format!("mixed action has a negative or non-finite entry: {probs:?}"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return arg(format!("mixed action sums to {total}"));
        }
        Ok(Self(probs))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform over an empty set");
        Self(vec![1.0 / n as f64; n])
    }

    pub fn pure(n: usize, i: usize) -> Self {
        assert!(i < n, "pure action {i} out of range {n}");
        let mut p = vec![0.0; n];
        p[i] = 1.0;
        Self(p)
    }

    /// Normalizes nonnegative weights; an all-zero vector gives the uniform distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return arg(format!("weights must be finite and nonnegative: {weights:?}"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Ok(Self::uniform(weights.len()));
        }
        let mut p: Vec<f64> = weights.iter().map(|w| w / total).collect();
        renormalize(&mut p);
        Ok(Self(p))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Inverse-CDF draw for `u` uniform on [0,1).
    pub fn sample(&self, u: f64) -> usize {
        let mut acc = 0.0;
        let mut last = 0;
        for (i, p) in self.0.iter().enumerate() {
            if *p > 0.0 {
                last = i;
                acc += p;
                if u < acc {
                    return i;
                }
            }
        }
        last
    }

    pub fn expect(&self, values: &[f64]) -> f64 {
        dot(&self.0, values)
    }
}

fn renormalize(p: &mut [f64]) {
    let total: f64 = p.iter().sum();
    if total > 0.0 {
        p.iter_mut().for_each(|x| *x /= total);
    }
}

/// Euclidean projection onto the probability simplex (sort-and-threshold).
pub fn simplex_project(v: &[f64]) -> Result<MixedAction> {
    if v.is_empty() || !all_finite(v) {
        return arg("simplex projection needs a nonempty finite vector");
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (k, s) in sorted.iter().enumerate() {
        cumsum += s;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if s - t > 0.0 {
            tau = t;
        }
    }
    let mut p: Vec<f64> = v.iter().map(|x| (x - tau).max(0.0)).collect();
    renormalize(&mut p);
    Ok(MixedAction(p))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    NonPositive,
    NonNegative,
}

/// Interpretation of the extra coordinates of a lifted target.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ratio {
    /// One trailing weight coordinate `w ∈ [low, high]` shared by all payoff coordinates.
    Shared { low: f64, high: f64 },
    /// One weight coordinate per payoff coordinate; payoffs first, weights after.
    PerCoordinate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoxSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxSet {
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }
    pub fn upper(&self) -> &[f64] {
        &self.upper
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    center: Vec<f64>,
    radius: f64,
}

impl Ball {
    pub fn center(&self) -> &[f64] {
        &self.center
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// `{x : ⟨a_j, x⟩ ≤ b_j for all j}` with a stored feasible point.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyhedron {
    normals: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    witness: Vec<f64>,
}

impl Polyhedron {
    pub fn halfspaces(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.normals.iter().map(Vec::as_slice).zip(self.offsets.iter().copied())
    }
    pub fn witness(&self) -> &[f64] {
        &self.witness
    }

    fn max_violation(&self, z: &[f64]) -> f64 {
        self.halfspaces()
            .map(|(a, b)| dot(a, z) - b)
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConeLift {
    inner: Box<ConvexTarget>,
    ratio: Ratio,
}

impl ConeLift {
    pub fn inner(&self) -> &ConvexTarget {
        &self.inner
    }
    pub fn ratio(&self) -> Ratio {
        self.ratio
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConvexTarget {
    Orthant(Vec<Sign>),
    Box(BoxSet),
    Ball(Ball),
    Halfspaces(Polyhedron),
    ConeLift(ConeLift),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub pi: Vec<f64>,
    pub dist: f64,
}

impl ConvexTarget {
    pub fn orthant(signs: Vec<Sign>) -> Result<Self> {
        if signs.is_empty() {
            return arg("orthant of dimension 0");
        }
        Ok(Self::Orthant(signs))
    }

    pub fn nonpositive_orthant(d: usize) -> Result<Self> {
        Self::orthant(vec![Sign::NonPositive; d])
    }

    /// Infinite bounds are allowed.
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return arg("box of dimension 0");
        }
        for (l, u) in lower.iter().zip(&upper) {
            if l.is_nan() || u.is_nan() || l > u || *l == f64::INFINITY || *u == f64::NEG_INFINITY {
                return arg(format!("invalid box bounds [{l}, {u}]"));
            }
        }
        Ok(Self::Box(BoxSet { lower, upper }))
    }

    pub fn singleton(point: Vec<f64>) -> Result<Self> {
        Self::boxed(point.clone(), point)
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() || !all_finite(&center) {
            return arg("ball center must be a nonempty finite vector");
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return arg(format!("ball radius must be positive, got {radius}"));
        }
        Ok(Self::Ball(Ball { center, radius }))
    }

    /// `{x : ⟨a_j, x⟩ ≤ b_j}`; `witness` must satisfy every constraint.
    pub fn halfspaces(normals: Vec<Vec<f64>>, offsets: Vec<f64>, witness: Vec<f64>) -> Result<Self> {
        check_dim(normals.len(), offsets.len())?;
        if witness.is_empty() || !all_finite(&witness) {
            return arg("polyhedron witness must be a nonempty finite vector");
        }
        for a in &normals {
            check_dim(witness.len(), a.len())?;
            if !all_finite(a) || norm(a) == 0.0 {
                return arg("halfspace normals must be finite and nonzero");
            }
        }
        let poly = Polyhedron { normals, offsets, witness };
        let v = poly.max_violation(&poly.witness);
        if v > MEMBERSHIP_TOL {
            return arg(format!("witness violates a halfspace by {v}"));
        }
        Ok(Self::Halfspaces(poly))
    }

    /// Lift of `inner`; a per-coordinate lift requires a box containing the origin.
    pub fn cone_lift(inner: ConvexTarget, ratio: Ratio) -> Result<Self> {
        match ratio {
            Ratio::Shared { low, high } => {
                if !(low > 0.0 && low <= high && high.is_finite()) {
                    return arg(format!("weight range [{low}, {high}] must satisfy 0 < low ≤ high"));
                }
            }
            Ratio::PerCoordinate => match &inner {
                Self::Box(b) if b.lower.iter().zip(&b.upper).all(|(l, u)| *l <= 0.0 && *u >= 0.0) => {}
                Self::Box(_) => return arg("per-coordinate lift needs a box containing the origin"),
                _ => return Err(Error::Unsupported("per-coordinate lift of a non-product target".into())),
            },
        }
        Ok(Self::ConeLift(ConeLift { inner: Box::new(inner), ratio }))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Orthant(s) => s.len(),
            Self::Box(b) => b.lower.len(),
            Self::Ball(b) => b.center.len(),
            Self::Halfspaces(p) => p.witness.len(),
            Self::ConeLift(c) => match c.ratio {
                Ratio::Shared { .. } => c.inner.dim() + 1,
                Ratio::PerCoordinate => 2 * c.inner.dim(),
            },
        }
    }

    pub fn contains(&self, z: &[f64], tol: f64) -> bool {
        z.len() == self.dim() && self.project(z).map(|p| p.dist <= tol).unwrap_or(false)
    }

    pub fn distance(&self, z: &[f64]) -> Result<f64> {
        Ok(self.project(z)?.dist)
    }

    pub fn project(&self, z: &[f64]) -> Result<Projection> {
        check_dim(self.dim(), z.len())?;
        if !all_finite(z) {
            return arg("cannot project a non-finite point");
        }
        let pi = match self {
            Self::Orthant(signs) => z
                .iter()
                .zip(signs)
                .map(|(x, s)| match s {
                    Sign::NonPositive => x.min(0.0),
                    Sign::NonNegative => x.max(0.0),
                })
                .collect(),
            Self::Box(b) => z
                .iter()
                .zip(b.lower.iter().zip(&b.upper))
                .map(|(x, (l, u))| x.clamp(*l, *u))
                .collect(),
            Self::Ball(b) => {
                let r = dist(z, &b.center);
                if r <= b.radius {
                    z.to_vec()
                } else {
                    let s = b.radius / r;
                    z.iter().zip(&b.center).map(|(x, c)| c + s * (x - c)).collect()
                }
            }
            Self::Halfspaces(p) => dykstra(p, z)?,
            Self::ConeLift(c) => match c.ratio {
                Ratio::Shared { low, high } => project_shared_lift(&c.inner, low, high, z)?,
                Ratio::PerCoordinate => {
                    let Self::Box(b) = c.inner.as_ref() else {
                        return Err(Error::Internal("per-coordinate lift over a non-box".into()));
                    };
                    project_per_coordinate(b, z)
                }
            },
        };
        let dist = dist(z, &pi);
        Ok(Projection { pi, dist })
    }
}

fn dykstra(p: &Polyhedron, z: &[f64]) -> Result<Vec<f64>> {
    if p.max_violation(z) <= 0.0 {
        return Ok(z.to_vec());
    }
    let d = z.len();
    let m = p.normals.len();
    let sq: Vec<f64> = p.normals.iter().map(|a| dot(a, a)).collect();
    let mut x = z.to_vec();
    let mut incr = vec![0.0; m * d];
    let mut y = vec![0.0; d];
    for _ in 0..DYKSTRA_MAX_SWEEPS {
        let mut change = 0.0;
        for j in 0..m {
            let a = &p.normals[j];
            let inc = &mut incr[j * d..(j + 1) * d];
            for k in 0..d {
                y[k] = x[k] + inc[k];
            }
            let s = (dot(a, &y) - p.offsets[j]).max(0.0) / sq[j];
            for k in 0..d {
                let nx = y[k] - s * a[k];
                inc[k] = y[k] - nx;
                change += (nx - x[k]) * (nx - x[k]);
                x[k] = nx;
            }
        }
        if change.sqrt() <= DYKSTRA_TOL && p.max_violation(&x) <= 1e-9 {
            return Ok(x);
        }
    }
    Err(Error::Numerical { what: "Dykstra projection", residual: p.max_violation(&x) })
}

/// Projection onto `{(w e, w) : e ∈ E, w ∈ [low, high]}` by a golden-section
/// search over `w`; the objective `w² d_E(y/w)² + (s − w)²` is convex.
fn project_shared_lift(inner: &ConvexTarget, low: f64, high: f64, z: &[f64]) -> Result<Vec<f64>> {
    let d = z.len() - 1;
    let (y, s) = (&z[..d], z[d]);
    let scaled = |w: f64| -> Result<Vec<f64>> { Ok(y.iter().map(|v| v / w).collect()) };
    let objective = |w: f64| -> Result<f64> {
        let pr = inner.project(&scaled(w)?)?;
        Ok(w * w * pr.dist * pr.dist + (s - w) * (s - w))
    };
    let (mut a, mut b) = (low, high);
    if b - a > 0.0 {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - g * (b - a);
        let mut e = a + g * (b - a);
        let mut fc = objective(c)?;
        let mut fe = objective(e)?;
        while b - a > 1e-13 * (1.0 + high) {
            if fc <= fe {
                b = e;
                e = c;
                fe = fc;
                c = b - g * (b - a);
                fc = objective(c)?;
            } else {
                a = c;
                c = e;
                fc = fe;
                e = a + g * (b - a);
                fe = objective(e)?;
            }
        }
    }
    let mut best = 0.5 * (a + b);
    for cand in [low, high] {
        if objective(cand)? < objective(best)? {
            best = cand;
        }
    }
    let inner_pi = inner.project(&scaled(best)?)?.pi;
    let mut out: Vec<f64> = inner_pi.iter().map(|e| e * best).collect();
    out.push(best);
    Ok(out)
}

/// Per pair `(z_k, w_k)`, projection onto the planar cone `{w ≥ 0, l w ≤ z ≤ u w}`.
fn project_per_coordinate(b: &BoxSet, z: &[f64]) -> Vec<f64> {
    let d = b.lower.len();
    let mut out = z.to_vec();
    for k in 0..d {
        let (l, u) = (b.lower[k], b.upper[k]);
        let (x, w) = (z[k], z[d + k]);
        let inside = w >= 0.0
            && (l == f64::NEG_INFINITY || x >= l * w)
            && (u == f64::INFINITY || x <= u * w);
        if inside {
            continue;
        }
        let rays = [
            if l.is_finite() { (l, 1.0) } else { (-1.0, 0.0) },
            if u.is_finite() { (u, 1.0) } else { (1.0, 0.0) },
        ];
        let mut best = (0.0, 0.0);
        let mut best_d = x * x + w * w;
        for (rx, rw) in rays {
            let t = ((x * rx + w * rw) / (rx * rx + rw * rw)).max(0.0);
            let (px, pw) = (t * rx, t * rw);
            let dd = (x - px) * (x - px) + (w - pw) * (w - pw);
            if dd < best_d {
                best_d = dd;
                best = (px, pw);
            }
        }
        out[k] = best.0;
        out[d + k] = best.1;
    }
    out
}

/// Euclidean projection of `z` onto `conv(points)` by Wolfe's min-norm-point
/// method; returns the point and its convex weights.
pub fn project_onto_hull(points: &[Vec<f64>], z: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = points.len();
    if m == 0 {
        return arg("hull of no points");
    }
    for p in points {
        check_dim(z.len(), p.len())?;
    }
    let q: Vec<Vec<f64>> = points.iter().map(|p| p.iter().zip(z).map(|(a, b)| a - b).collect()).collect();
    let scale = q.iter().map(|v| dot(v, v)).fold(0.0, f64::max).max(1e-300);
    let start = (0..m).min_by(|&i, &j| dot(&q[i], &q[i]).total_cmp(&dot(&q[j], &q[j]))).unwrap_or(0);
    let mut active = vec![start];
    let mut lambda = vec![1.0];
    let mut x = q[start].clone();
    let combine = |active: &[usize], w: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; z.len()];
        for (&i, wi) in active.iter().zip(w) {
            for (o, v) in out.iter_mut().zip(&q[i]) {
                *o += wi * v;
            }
        }
        out
    };
    for _ in 0..(50 * m + 100) {
        let xx = dot(&x, &x);
        let (j, best) = (0..m)
            .map(|i| (i, dot(&x, &q[i])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((0, 0.0));
        if best >= xx - 1e-14 * scale || active.contains(&j) {
            break;
        }
        active.push(j);
        lambda.push(0.0);
        loop {
            let Some(alpha) = affine_min_norm(&q, &active) else {
                active.pop();
                lambda.pop();
                break;
            };
            if alpha.iter().all(|a| *a > 1e-14) {
                lambda = alpha;
                break;
            }
            let mut theta = 1.0f64;
            for (l, a) in lambda.iter().zip(&alpha) {
                if *a <= 1e-14 && l - a > 0.0 {
                    theta = theta.min(l / (l - a));
                }
            }
            for (l, a) in lambda.iter_mut().zip(&alpha) {
                *l = theta * a + (1.0 - theta) * *l;
            }
            let keep: Vec<bool> = lambda.iter().map(|l| *l > 1e-14).collect();
            let mut k = 0;
            active.retain(|_| {
                k += 1;
                keep[k - 1]
            });
            let mut k = 0;
            lambda.retain(|_| {
                k += 1;
                keep[k - 1]
            });
            let total: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= total);
        }
        x = combine(&active, &lambda);
    }
    let mut weights = vec![0.0; m];
    for (&i, l) in active.iter().zip(&lambda) {
        weights[i] += l;
    }
    let pt = points_combination(points, &weights);
    Ok((pt, weights))
}

fn points_combination(points: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; points[0].len()];
    for (p, wi) in points.iter().zip(w) {
        for (o, v) in out.iter_mut().zip(p) {
            *o += wi * v;
        }
    }
    out
}

/// Weights of the min-norm point of the affine hull of `q[active]`.
fn affine_min_norm(q: &[Vec<f64>], active: &[usize]) -> Option<Vec<f64>> {
    let k = active.len();
    let n = k + 1;
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n];
    for r in 0..k {
        for c in 0..k {
            a[r * n + c] = dot(&q[active[r]], &q[active[c]]);
        }
        a[r * n + k] = 1.0;
        a[k * n + r] = 1.0;
    }
    b[k] = 1.0;
    let sol = crate::invariant::solve_dense(a, b, n).ok()?;
    let alpha = sol[..k].to_vec();
    if alpha.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let total: f64 = alpha.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return None;
    }
    Some(alpha)
}

/// Exact ℓ∞ distance to a box.
pub fn distance_linf(target: &ConvexTarget, z: &[f64]) -> Result<f64> {
    let ConvexTarget::Box(b) = target else {
        return Err(Error::Unsupported("ℓ∞ distance is only implemented for boxes".into()));
    };
    check_dim(b.lower.len(), z.len())?;
    Ok(z.iter()
        .zip(b.lower.iter().zip(&b.upper))
        .map(|(x, (l, u))| (l - x).max(x - u).max(0.0))
        .fold(0.0, f64::max))
}

/// How points of Δ(Ω) are written.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coords {
    /// Probability vectors in R^Ω; outcome ω is the unit vector e_ω.
    Full,
    /// The last Ω−1 probabilities in R^{Ω−1}; outcome 0 is the origin.
    Reduced,
}

pub fn to_reduced(full: &[f64]) -> Vec<f64> {
    full[1..].to_vec()
}

pub fn to_full(reduced: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(reduced.len() + 1);
    out.push(1.0 - reduced.iter().sum::<f64>());
    out.extend_from_slice(reduced);
    out
}

/// Integer coordinates of a regular grid: `p[ℓ] = step · n[ℓ]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    step: f64,
    index: Vec<Vec<usize>>,
    lookup: HashMap<Vec<usize>, usize>,
}

impl Lattice {
    pub fn step(&self) -> f64 {
        self.step
    }
    pub fn index(&self, l: usize) -> &[usize] {
        &self.index[l]
    }
    pub fn find(&self, n: &[usize]) -> Option<usize> {
        self.lookup.get(n).copied()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    points: Vec<Vec<f64>>,
    nu: Vec<f64>,
    coords: Coords,
    lattice: Option<Lattice>,
}

impl Grid {
    pub fn new(points: Vec<Vec<f64>>, coords: Coords) -> Result<Self> {
        if points.is_empty() {
            return arg("empty grid");
        }
        let d = points[0].len();
        if d == 0 {
            return arg("grid points of dimension 0");
        }
        for p in &points {
            check_dim(d, p.len())?;
            let total: f64 = p.iter().sum();
            let ok_entries = p.iter().all(|x| x.is_finite() && *x >= -1e-9);
            let ok_total = match coords {
                Coords::Full => (total - 1.0).abs() <= 1e-9,
                Coords::Reduced => total <= 1.0 + 1e-9,
            };
            if !ok_entries || !ok_total {
                return arg(format!("grid point {p:?} is outside the simplex"));
            }
        }
        for i in 0..points.len() {
            for j in 0..i {
                if points[i] == points[j] {
                    return arg(format!("duplicate grid point {:?}", points[i]));
                }
            }
        }
        let nu = vec![0.0; points.len()];
        Ok(Self { points, nu, coords, lattice: None })
    }

    /// All points of Δ(Ω) with coordinates in {0, 1/r, …, 1}, in full coordinates.
    pub fn simplex(outcomes: usize, resolution: usize) -> Result<Self> {
        if outcomes < 2 || resolution < 1 {
            return arg("simplex grid needs Ω ≥ 2 and resolution ≥ 1");
        }
        let pts = compositions(outcomes, resolution)
            .into_iter()
            .map(|c| c.iter().map(|&k| k as f64 / resolution as f64).collect())
            .collect();
        Self::new(pts, Coords::Full)
    }

    pub fn with_weights(mut self, nu: Vec<f64>) -> Result<Self> {
        check_dim(self.points.len(), nu.len())?;
        if !all_finite(&nu) {
            return arg("grid weights must be finite");
        }
        self.nu = nu;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, l: usize) -> &[f64] {
        &self.points[l]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.nu
    }

    pub fn coords(&self) -> Coords {
        self.coords
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn outcomes(&self) -> usize {
        match self.coords {
            Coords::Full => self.dim(),
            Coords::Reduced => self.dim() + 1,
        }
    }

    /// The outcome ω as a point in this grid's coordinates.
    pub fn outcome_point(&self, omega: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        match self.coords {
            Coords::Full => v[omega] = 1.0,
            Coords::Reduced if omega > 0 => v[omega - 1] = 1.0,
            Coords::Reduced => {}
        }
        v
    }

    pub fn lattice(&self) -> Option<&Lattice> {
        self.lattice.as_ref()
    }

    /// Lattice neighbours: one step apart in exactly one coordinate.
    pub fn neighbors(&self, l: usize) -> Result<Vec<usize>> {
        let lat = self
            .lattice
            .as_ref()
            .ok_or_else(|| Error::Unsupported("neighbours are defined only on regular grids".into()))?;
        let n = &lat.index[l];
        let mut out = Vec::new();
        for k in 0..n.len() {
            let mut m = n.clone();
            if n[k] > 0 {
                m[k] = n[k] - 1;
                out.extend(lat.find(&m));
            }
            m[k] = n[k] + 1;
            out.extend(lat.find(&m));
        }
        out.sort_unstable();
        Ok(out)
    }

    fn regular(d: usize, step: f64) -> Self {
        let limit = (1.0 / step + 1e-9).floor() as usize;
        let mut index = Vec::new();
        let mut cur = vec![0usize; d];
        enumerate_bounded(&mut cur, 0, limit, &mut index);
        let points = index.iter().map(|n| n.iter().map(|&k| k as f64 * step).collect()).collect();
        let lookup = index.iter().cloned().enumerate().map(|(i, n)| (n, i)).collect();
        Self {
            nu: vec![0.0; index.len()],
            points,
            coords: Coords::Reduced,
            lattice: Some(Lattice { step, index, lookup }),
        }
    }
}

fn enumerate_bounded(cur: &mut Vec<usize>, k: usize, budget: usize, out: &mut Vec<Vec<usize>>) {
    if k == cur.len() {
        out.push(cur.clone());
        return;
    }
    for v in 0..=budget {
        cur[k] = v;
        enumerate_bounded(cur, k + 1, budget - v, out);
    }
    cur[k] = 0;
}

/// All vectors of `parts` nonnegative integers summing to `total`.
pub(crate) fn compositions(parts: usize, total: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; parts - 1];
    let mut raw = Vec::new();
    enumerate_bounded(&mut cur, 0, total, &mut raw);
    for r in raw {
        let rest = total - r.iter().sum::<usize>();
        let mut c = vec![rest];
        c.extend(r);
        out.push(c);
    }
    out
}

/// Lattice `{Σ n_k (2ε/√d) e_k} ∩ Δ(Ω)` in (Ω−1)-coordinates, `d = Ω − 1`.
pub fn make_regular_grid(d: usize, eps: f64) -> Result<Grid> {
    if d == 0 || !(eps > 0.0 && eps <= 1.0) {
        return arg(format!("regular grid needs d ≥ 1 and 0 < ε ≤ 1 (got d={d}, ε={eps})"));
    }
    Ok(Grid::regular(d, 2.0 * eps / (d as f64).sqrt()))
}

/// Like [`make_regular_grid`] but with the largest step `1/k ≤ 2ε/√d`, so the
/// lattice reaches every vertex of the simplex.
pub fn make_covering_grid(d: usize, eps: f64) -> Result<Grid> {
    if d == 0 || !(eps > 0.0 && eps <= 1.0) {
        return arg(format!("regular grid needs d ≥ 1 and 0 < ε ≤ 1 (got d={d}, ε={eps})"));
    }
    let k = ((d as f64).sqrt() / (2.0 * eps) - 1e-12).ceil().max(1.0);
    Ok(Grid::regular(d, 1.0 / k))
}

/// Index minimizing `‖q − p[ℓ]‖² − ν[ℓ]`, lowest index on ties.
pub fn cell_assign(grid: &Grid, q: &[f64]) -> Result<usize> {
    if grid.is_empty() {
        return arg("empty grid");
    }
    check_dim(grid.dim(), q.len())?;
    let mut best = 0;
    let mut best_v = f64::INFINITY;
    for (l, p) in grid.points.iter().enumerate() {
        let v = dist(q, p).powi(2) - grid.nu[l];
        if v < best_v {
            best_v = v;
            best = l;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn orthant_clips_positive_part() {
        let t = ConvexTarget::nonpositive_orthant(2).unwrap();
        let p = t.project(&[1.0, -2.0]).unwrap();
        assert_eq!(p.pi, vec![0.0, -2.0]);
        assert_eq!(p.dist, 1.0);
    }

    #[test]
    fn ball_scales_radially() {
        let t = ConvexTarget::ball(vec![0.0, 0.0], 1.0).unwrap();
        let p = t.project(&[3.0, 4.0]).unwrap();
        assert!(close(&p.pi, &[0.6, 0.8], 1e-15));
        assert!((p.dist - 4.0).abs() < 1e-15);
    }

    #[test]
    fn box_clamps() {
        let t = ConvexTarget::boxed(vec![0.0; 2], vec![1.0; 2]).unwrap();
        let p = t.project(&[2.0, 0.5]).unwrap();
        assert_eq!(p.pi, vec![1.0, 0.5]);
        assert_eq!(p.dist, 1.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let t = ConvexTarget::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert!(matches!(t.project(&[1.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn linf_distance() {
        let unit = ConvexTarget::boxed(vec![0.0; 2], vec![1.0; 2]).unwrap();
        assert!((distance_linf(&unit, &[1.3, 0.5]).unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(distance_linf(&unit, &[0.2, 0.9]).unwrap(), 0.0);
        let origin = ConvexTarget::singleton(vec![0.0]).unwrap();
        assert_eq!(distance_linf(&origin, &[-2.0]).unwrap(), 2.0);
        let ball = ConvexTarget::ball(vec![0.0], 1.0).unwrap();
        assert!(matches!(distance_linf(&ball, &[0.0]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn simplex_projection_examples() {
        assert!(close(simplex_project(&[0.2, 0.8]).unwrap().probs(), &[0.2, 0.8], 1e-15));
        assert!(close(simplex_project(&[0.6, 0.6, 0.6]).unwrap().probs(), &[1.0 / 3.0; 3], 1e-15));
        assert!(close(simplex_project(&[1.5, -0.5]).unwrap().probs(), &[1.0, 0.0], 1e-15));
    }

    #[test]
    fn cell_assignment() {
        let g = Grid::new(vec![vec![0.0], vec![0.5], vec![1.0]], Coords::Reduced).unwrap();
        assert_eq!(cell_assign(&g, &[0.4]).unwrap(), 1);
        for l in 0..3 {
            assert_eq!(cell_assign(&g, g.point(l)).unwrap(), l);
        }
        let w = Grid::new(vec![vec![0.0], vec![1.0]], Coords::Reduced)
            .unwrap()
            .with_weights(vec![0.5, 0.0])
            .unwrap();
        assert_eq!(cell_assign(&w, &[0.6]).unwrap(), 0);
    }

    #[test]
    fn regular_grid_shapes() {
        let g = make_regular_grid(1, 0.25).unwrap();
        assert_eq!(g.points(), &[vec![0.0], vec![0.5], vec![1.0]]);
        let single = make_regular_grid(2, 0.9).unwrap();
        assert_eq!(single.points(), &[vec![0.0, 0.0]]);
        let g2 = make_regular_grid(2, 0.2).unwrap();
        let interior = g2
            .points()
            .iter()
            .position(|p| close(p, &[2.0 * 0.2 / 2f64.sqrt(); 2], 1e-12))
            .unwrap();
        assert_eq!(g2.neighbors(interior).unwrap().len(), 4);
    }

    #[test]
    fn halfspace_projection_hits_the_corner() {
        // z ≥ v1, z ≥ v2 written as v_a − z ≤ 0
        let t = ConvexTarget::halfspaces(
            vec![vec![-1.0, 1.0, 0.0], vec![-1.0, 0.0, 1.0]],
            vec![0.0, 0.0],
            vec![0.0; 3],
        )
        .unwrap();
        let p = t.project(&[0.0, 1.0, 0.0]).unwrap();
        assert!(close(&p.pi, &[0.5, 0.5, 0.0], 1e-9));
        assert!((p.dist - 0.5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn per_coordinate_lift_handles_empty_activation() {
        let inner = ConvexTarget::boxed(vec![-0.5], vec![0.5]).unwrap();
        let t = ConvexTarget::cone_lift(inner, Ratio::PerCoordinate).unwrap();
        assert_eq!(t.distance(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(t.distance(&[0.25, 1.0]).unwrap(), 0.0);
        assert!(t.distance(&[1.0, 1.0]).unwrap() > 0.0);
    }

    #[test]
    fn mixed_action_validation() {
        assert!(MixedAction::new(vec![0.5, 0.6]).is_err());
        assert!(MixedAction::new(vec![-0.1, 1.1]).is_err());
        assert_eq!(MixedAction::from_weights(&[0.0, 0.0]).unwrap(), MixedAction::uniform(2));
        let m = MixedAction::new(vec![0.25, 0.0, 0.75]).unwrap();
        assert_eq!(m.sample(0.1), 0);
        assert_eq!(m.sample(0.3), 2);
        assert_eq!(m.sample(0.999_999), 2);
    }
}
