//! Matrix convex combinations and the tools that act on them.
//!
//! A matrix convex combination of points `x_i` (tuples of `k_i × k_i`
//! matrices) is `x = Σ γ_i* x_i γ_i` with `Σ γ_i* γ_i = I_n`. Lifting each
//! term to the pair `(γ*γ, γ*xγ)` scaled to normalized trace one turns the
//! matrix convex combination into an ordinary convex combination, which is
//! what makes classical Carathéodory elimination available here.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::{cmatrix, cmatrix_vec};
use crate::numerics::{
    frobenius, frobenius_distance, herm_eig, identity, inv_sqrt_pd, real, CMatrix, Tolerances,
    HERM_TOL,
};

/// Default seed for the commutant randomization in [`irreducible_split`].
pub const DEFAULT_SPLIT_SEED: u64 = 0x5eed_c0de;

/// A point of `M_n(C^d)`: `d` coordinate matrices of size `level × level`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixPoint {
    pub level: usize,
    #[serde(with = "cmatrix_vec")]
    pub coords: Vec<CMatrix>,
    #[serde(default)]
    pub selfadjoint: bool,
}

impl MatrixPoint {
    pub fn new(coords: Vec<CMatrix>, selfadjoint: bool) -> Result<Self> {
        let level = coords.first().map(|c| c.nrows()).unwrap_or(0);
        let point = Self { level, coords, selfadjoint };
        point.validate()?;
        Ok(point)
    }

    /// Scalar point at level 1.
    pub fn scalar(values: &[Complex64], selfadjoint: bool) -> Result<Self> {
        Self::new(values.iter().map(|&z| CMatrix::from_element(1, 1, z)).collect(), selfadjoint)
    }

    pub fn validate(&self) -> Result<()> {
        for c in &self.coords {
            if c.nrows() != self.level || c.ncols() != self.level {
                return Err(Error::ShapeMismatch(format!(
                    "coordinate is {}x{}, point level is {}",
                    c.nrows(),
                    c.ncols(),
                    self.level
                )));
            }
            if self.selfadjoint {
                let defect = frobenius_distance(c, &c.adjoint());
                if defect > HERM_TOL * frobenius(c).max(1.0) {
                    return Err(Error::NotHermitian { defect });
                }
            }
        }
        Ok(())
    }

    pub fn arity(&self) -> usize {
        self.coords.len()
    }

    /// Coordinatewise `v* x v`.
    pub fn compress(&self, v: &CMatrix) -> MatrixPoint {
        let coords = self.coords.iter().map(|c| v.adjoint() * c * v).collect();
        MatrixPoint { level: v.ncols(), coords, selfadjoint: self.selfadjoint }
    }

    /// Coordinatewise `v x v*`.
    pub fn expand(&self, v: &CMatrix) -> Vec<CMatrix> {
        self.coords.iter().map(|c| v * c * v.adjoint()).collect()
    }
}

/// One term `(γ, x)` of a matrix convex combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    #[serde(with = "cmatrix")]
    pub gamma: CMatrix,
    pub point: MatrixPoint,
}

/// `Σ γ_i* x_i γ_i` with `Σ γ_i* γ_i = I_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixConvexCombination {
    #[serde(rename = "n")]
    pub target_level: usize,
    pub terms: Vec<Term>,
}

impl MatrixConvexCombination {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Σ γ_i* γ_i`.
    pub fn gram(&self) -> CMatrix {
        let n = self.target_level;
        self.terms.iter().fold(CMatrix::zeros(n, n), |acc, t| acc + t.gamma.adjoint() * &t.gamma)
    }

    /// `‖Σ γ_i* γ_i − I_n‖_F`.
    pub fn unit_defect(&self) -> f64 {
        frobenius_distance(&self.gram(), &identity(self.target_level))
    }

    /// The represented point `Σ γ_i* x_i γ_i`, coordinatewise.
    pub fn represented(&self) -> Vec<CMatrix> {
        let n = self.target_level;
        let arity = self.terms.first().map(|t| t.point.arity()).unwrap_or(0);
        let mut acc = vec![CMatrix::zeros(n, n); arity];
        for t in &self.terms {
            for (a, c) in acc.iter_mut().zip(&t.point.coords) {
                *a += t.gamma.adjoint() * c * &t.gamma;
            }
        }
        acc
    }

    pub fn is_selfadjoint(&self) -> bool {
        self.terms.iter().all(|t| t.point.selfadjoint)
    }

    /// Shape checks plus `‖Σγ*γ − I‖_F ≤ 1e-10·n`.
    pub fn validate(&self) -> Result<()> {
        let n = self.target_level;
        if n == 0 {
            return Err(Error::InvalidCombination("target level must be positive".into()));
        }
        let arity = self.terms.first().map(|t| t.point.arity());
        for (i, t) in self.terms.iter().enumerate() {
            t.point.validate()?;
            if t.gamma.ncols() != n || t.gamma.nrows() != t.point.level {
                return Err(Error::InvalidCombination(format!(
                    "term {i}: gamma is {}x{}, expected {}x{n}",
                    t.gamma.nrows(),
                    t.gamma.ncols(),
                    t.point.level
                )));
            }
            if Some(t.point.arity()) != arity {
                return Err(Error::InvalidCombination(format!("term {i}: coordinate count differs")));
            }
        }
        let defect = self.unit_defect();
        if defect > 1e-10 * n as f64 {
            return Err(Error::InvalidCombination(format!("Σγ*γ differs from I by {defect:.3e}")));
        }
        Ok(())
    }
}

/// Rescale arbitrary nonzero coefficients `B_i` to `B_i S^{-1/2}`, `S = Σ B_i* B_i`,
/// so that they form the coefficients of a matrix convex combination.
pub fn normalize_coefficients(raw: &[CMatrix]) -> Result<Vec<CMatrix>> {
    let n = raw.first().map(|b| b.ncols()).ok_or(Error::InvalidCombination("no terms".into()))?;
    let s = raw.iter().fold(CMatrix::zeros(n, n), |acc, b| acc + b.adjoint() * b);
    let s_inv_half = inv_sqrt_pd(&s)?;
    Ok(raw.iter().map(|b| b * &s_inv_half).collect())
}

fn normalized_trace(a: &CMatrix) -> Complex64 {
    a.trace() / real(a.nrows() as f64)
}

/// Element `(γ*γ, γ*xγ)` of the lifted set, with normalized trace of `γ*γ` equal to one.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedPoint {
    /// Normalized coefficient `γ`.
    pub gamma: CMatrix,
    /// `γ*γ`.
    pub alpha: CMatrix,
    /// `γ* x γ` coordinatewise.
    pub value: Vec<CMatrix>,
    pub weight: f64,
}

/// A combination rewritten as a classical convex combination of lifted points.
#[derive(Debug, Clone)]
pub struct Lifted {
    pub weights: Vec<f64>,
    pub lifted: Vec<LiftedPoint>,
    /// Index of the originating term for each lifted point.
    pub source: Vec<usize>,
}

/// Rewrite `x = Σ β_j* x_j β_j` as `(I, x) = Σ t_j (γ_j*γ_j, γ_j* x_j γ_j)`.
///
/// `t_j` is the normalized trace of `β_j*β_j` and `γ_j = t_j^{-1/2} β_j`.
/// Terms with zero coefficient are dropped.
pub fn lift_combination(c: &MatrixConvexCombination) -> Result<Lifted> {
    c.validate()?;
    let mut weights = Vec::with_capacity(c.len());
    let mut lifted = Vec::with_capacity(c.len());
    let mut source = Vec::with_capacity(c.len());
    for (i, term) in c.terms.iter().enumerate() {
        let gram = term.gamma.adjoint() * &term.gamma;
        let t = normalized_trace(&gram).re;
        if t <= 0.0 {
            continue;
        }
        let gamma = term.gamma.scale(t.sqrt().recip());
        let alpha = gamma.adjoint() * &gamma;
        let value = term.point.coords.iter().map(|x| gamma.adjoint() * x * &gamma).collect();
        weights.push(t);
        lifted.push(LiftedPoint { gamma, alpha, value, weight: t });
        source.push(i);
    }
    Ok(Lifted { weights, lifted, source })
}

/// Inverse of [`lift_combination`]: `β_j = w_j^{1/2} γ_j`.
pub fn unlift_point(
    weights: &[f64],
    lifted: &[LiftedPoint],
    points: &[MatrixPoint],
) -> Result<MatrixConvexCombination> {
    if weights.len() != lifted.len() || lifted.len() != points.len() || lifted.is_empty() {
        return Err(Error::ShapeMismatch("weights, lifted points and points must have equal nonzero length".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-10 || weights.iter().any(|w| *w < 0.0) {
        return Err(Error::NotNormalized { defect: (total - 1.0).abs() });
    }
    let n = lifted[0].alpha.nrows();
    let mixed = weights
        .iter()
        .zip(lifted)
        .fold(CMatrix::zeros(n, n), |acc, (w, l)| acc + l.alpha.scale(*w));
    let defect = frobenius_distance(&mixed, &identity(n));
    if defect > 1e-9 {
        return Err(Error::NotNormalized { defect });
    }
    let terms = weights
        .iter()
        .zip(lifted)
        .zip(points)
        .map(|((w, l), p)| Term { gamma: l.gamma.scale(w.sqrt()), point: p.clone() })
        .collect();
    Ok(MatrixConvexCombination { target_level: n, terms })
}

/// Result of [`compress_to_surjective`].
#[derive(Debug, Clone)]
pub struct Compression {
    /// Surjective coefficient `δ*γ` of shape `r × n`.
    pub beta: CMatrix,
    /// Isometry `k × r` onto the range of `γ`.
    pub delta: CMatrix,
    /// `δ* x δ`.
    pub compressed: MatrixPoint,
}

/// Replace `(γ, x)` by a surjective `β = δ*γ` and the compression `δ*xδ`.
pub fn compress_to_surjective(gamma: &CMatrix, point: &MatrixPoint, tol: &Tolerances) -> Result<Compression> {
    if gamma.nrows() != point.level {
        return Err(Error::ShapeMismatch(format!(
            "gamma has {} rows but point has level {}",
            gamma.nrows(),
            point.level
        )));
    }
    if frobenius(gamma) == 0.0 {
        return Err(Error::ZeroCoefficient);
    }
    let eig = herm_eig(&(gamma * gamma.adjoint()))?;
    let lambda_max = eig.values.last().copied().unwrap_or(0.0);
    let kept: Vec<usize> = (0..eig.values.len()).rev().filter(|&j| eig.values[j] > tol.rank_tol * lambda_max).collect();
    if kept.is_empty() {
        return Err(Error::ZeroCoefficient);
    }
    let mut delta = CMatrix::zeros(gamma.nrows(), kept.len());
    for (dst, &j) in kept.iter().enumerate() {
        delta.set_column(dst, &eig.vectors.column(j));
    }
    let beta = delta.adjoint() * gamma;
    let compressed = point.compress(&delta);
    Ok(Compression { beta, delta, compressed })
}

/// Real coordinates of a Hermitian matrix: diagonal, then re/im of the strict upper triangle.
fn push_hermitian_coords(a: &CMatrix, out: &mut Vec<f64>) {
    let n = a.nrows();
    for i in 0..n {
        out.push(a[(i, i)].re);
    }
    for i in 0..n {
        for j in i + 1..n {
            out.push(a[(i, j)].re);
            out.push(a[(i, j)].im);
        }
    }
}

fn push_general_coords(a: &CMatrix, out: &mut Vec<f64>) {
    for z in a.iter() {
        out.push(z.re);
        out.push(z.im);
    }
}

fn lifted_coords(l: &LiftedPoint, selfadjoint: bool) -> Vec<f64> {
    let mut v = Vec::new();
    push_hermitian_coords(&l.alpha, &mut v);
    for x in &l.value {
        if selfadjoint {
            push_hermitian_coords(x, &mut v);
        } else {
            push_general_coords(x, &mut v);
        }
    }
    v
}

/// Upper bound on the length after reduction: `n²(2d+1)`, or `n²(d+1)` for self-adjoint points.
pub fn caratheodory_bound(n: usize, arity: usize, selfadjoint: bool) -> usize {
    if selfadjoint {
        n * n * (arity + 1)
    } else {
        n * n * (2 * arity + 1)
    }
}

/// Relative singular value cutoff for affine dependence.
const DEPENDENCE_TOL: f64 = 1e-11;

/// Eliminate terms of an active set along affine dependencies until none remain.
///
/// `vectors[j]` is the real coordinate vector of term `active[j]`; `weights`
/// is indexed like `vectors`. Returns the surviving positions.
fn eliminate(vectors: &[Vec<f64>], weights: &mut [f64], mut active: Vec<usize>) -> Vec<usize> {
    let rows = vectors.first().map(|v| v.len() + 1).unwrap_or(1);
    loop {
        let s = active.len();
        if s <= 1 {
            return active;
        }
        // square padding so the SVD returns a complete set of right singular vectors
        let dim = rows.max(s);
        let mut m = DMatrix::<f64>::zeros(dim, s);
        for (col, &j) in active.iter().enumerate() {
            m[(0, col)] = 1.0;
            for (row, x) in vectors[j].iter().enumerate() {
                m[(row + 1, col)] = *x;
            }
        }
        let svd = m.svd(false, true);
        let v_t = svd.v_t.expect("right singular vectors requested");
        let sigma_max = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
        let mut nulls: Vec<Vec<f64>> = Vec::new();
        for (k, &sv) in svd.singular_values.iter().enumerate() {
            if sv <= DEPENDENCE_TOL * sigma_max {
                nulls.push(v_t.row(k).iter().copied().collect());
            }
        }
        if nulls.is_empty() {
            return active;
        }
        // use each null vector in turn, keeping the remaining ones zero on eliminated slots
        let mut alive = vec![true; s];
        for idx in 0..nulls.len() {
            let c = nulls[idx].clone();
            let (c, pivot) = match pick_pivot(&c, &active, weights, &alive) {
                Some(p) => p,
                None => continue,
            };
            let lambda = weights[active[pivot]] / c[pivot];
            for (pos, &j) in active.iter().enumerate() {
                if alive[pos] {
                    weights[j] -= lambda * c[pos];
                }
            }
            weights[active[pivot]] = 0.0;
            let mut died = 0;
            for (pos, &j) in active.iter().enumerate() {
                if alive[pos] && weights[j] <= 0.0 {
                    weights[j] = 0.0;
                    alive[pos] = false;
                    died += 1;
                }
            }
            if died > 1 {
                // ties: the remaining null vectors are stale on the extra slots
                break;
            }
            for other in nulls.iter_mut().skip(idx + 1) {
                let f = other[pivot] / c[pivot];
                for (o, ci) in other.iter_mut().zip(&c) {
                    *o -= f * ci;
                }
            }
        }
        active = active.into_iter().zip(alive).filter(|(_, a)| *a).map(|(j, _)| j).collect();
    }
}

/// Orient `c` so it has a positive entry and choose the entry minimizing `t_j / c_j`.
fn pick_pivot(c: &[f64], active: &[usize], weights: &[f64], alive: &[bool]) -> Option<(Vec<f64>, usize)> {
    let scale = c.iter().zip(alive).filter(|(_, a)| **a).fold(0.0f64, |m, (x, _)| m.max(x.abs()));
    if scale == 0.0 {
        return None;
    }
    let floor = 1e-9 * scale;
    let positive = c.iter().zip(alive).filter(|(x, a)| **a && **x > floor).count();
    let c: Vec<f64> = if positive > 0 { c.to_vec() } else { c.iter().map(|x| -x).collect() };
    let mut best: Option<(usize, f64)> = None;
    for (pos, (&cj, &a)) in c.iter().zip(alive).enumerate() {
        if !a || cj <= floor {
            continue;
        }
        let ratio = weights[active[pos]] / cj;
        if best.is_none_or(|(_, r)| ratio < r) {
            best = Some((pos, ratio));
        }
    }
    best.map(|(pos, _)| (c, pos))
}

/// Carathéodory reduction that also reports which input terms survive.
pub fn caratheodory_reduce_indexed(c: &MatrixConvexCombination) -> Result<(MatrixConvexCombination, Vec<usize>)> {
    let lifted = lift_combination(c)?;
    let selfadjoint = c.is_selfadjoint();
    let vectors: Vec<Vec<f64>> = lifted.lifted.iter().map(|l| lifted_coords(l, selfadjoint)).collect();
    let mut weights = lifted.weights.clone();
    let rows = vectors.first().map(|v| v.len() + 1).unwrap_or(1);

    // stream terms in so each SVD stays at most twice the coordinate dimension
    let mut active: Vec<usize> = Vec::new();
    for j in 0..vectors.len() {
        active.push(j);
        if active.len() >= 2 * rows {
            active = eliminate(&vectors, &mut weights, active);
        }
    }
    let active = eliminate(&vectors, &mut weights, active);

    let total: f64 = active.iter().map(|&j| weights[j]).sum();
    let kept_weights: Vec<f64> = active.iter().map(|&j| weights[j] / total).collect();
    let kept_lifted: Vec<LiftedPoint> = active.iter().map(|&j| lifted.lifted[j].clone()).collect();
    let points: Vec<MatrixPoint> = active.iter().map(|&j| c.terms[lifted.source[j]].point.clone()).collect();
    let sources = active.iter().map(|&j| lifted.source[j]).collect();
    let reduced = unlift_point(&kept_weights, &kept_lifted, &points)?;
    Ok((reduced, sources))
}

/// Shorten a matrix convex combination without changing the represented point.
///
/// The output has length at most `n²(2d+1)` (`n²(d+1)` when every point is
/// self-adjoint) and uses only points of the input.
pub fn caratheodory_reduce(c: &MatrixConvexCombination) -> Result<MatrixConvexCombination> {
    caratheodory_reduce_indexed(c).map(|(r, _)| r)
}

/// Outcome of [`irreducible_split`].
#[derive(Debug, Clone)]
pub enum Split {
    Irreducible,
    Reducible {
        /// Isometry `n × k` onto an invariant subspace.
        beta: CMatrix,
        /// Isometry `n × l` onto its orthogonal complement.
        delta: CMatrix,
        x_beta: MatrixPoint,
        x_delta: MatrixPoint,
    },
}

/// Vectorized commutator `P ↦ AP − PA` (column-major `vec`).
fn commutator_block(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let mut block = CMatrix::zeros(n * n, n * n);
    // vec(AP)[i + n j] = Σ_k A[i,k] P[k,j];  vec(PA)[i + n j] = Σ_k P[i,k] A[k,j]
    for i in 0..n {
        for j in 0..n {
            let row = i + n * j;
            for k in 0..n {
                block[(row, k + n * j)] += a[(i, k)];
                block[(row, i + n * k)] -= a[(k, j)];
            }
        }
    }
    block
}

/// Orthonormal basis (as matrices) of the commutant of the coordinates and their adjoints.
pub fn commutant_basis(coords: &[CMatrix]) -> Vec<CMatrix> {
    let n = coords.first().map(|c| c.nrows()).unwrap_or(0);
    if n == 0 {
        return vec![];
    }
    let mut generators: Vec<CMatrix> = Vec::new();
    for c in coords {
        generators.push(c.clone());
        generators.push(c.adjoint());
    }
    let nn = n * n;
    let mut system = CMatrix::zeros(nn * generators.len().max(1), nn);
    for (g, a) in generators.iter().enumerate() {
        system.view_mut((g * nn, 0), (nn, nn)).copy_from(&commutator_block(a));
    }
    let scale = coords.iter().map(frobenius).fold(0.0f64, f64::max).max(1.0);
    let svd = system.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut basis = Vec::new();
    for (k, &sv) in svd.singular_values.iter().enumerate() {
        if sv <= 1e-9 * scale {
            let v: Vec<Complex64> = v_t.row(k).iter().map(|z| z.conj()).collect();
            basis.push(CMatrix::from_column_slice(n, n, &v));
        }
    }
    basis
}

/// Split a matrix point along a nontrivial reducing subspace, if one exists.
///
/// The commutant of `{x_i, x_i*, I}` is computed as a null space; a random
/// Hermitian element of it (seeded) is diagonalized and its lowest eigenspace
/// gives the reducing subspace. A one-dimensional commutant certifies
/// irreducibility.
pub fn irreducible_split(x: &MatrixPoint, seed: u64) -> Result<Split> {
    x.validate()?;
    let n = x.level;
    if n <= 1 {
        return Ok(Split::Irreducible);
    }
    let basis = commutant_basis(&x.coords);
    if basis.len() <= 1 {
        return Ok(Split::Irreducible);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = x.coords.iter().map(frobenius).fold(0.0f64, f64::max).max(1.0);
    for _attempt in 0..16 {
        let mut h = CMatrix::zeros(n, n);
        for c in &basis {
            let herm = (c + c.adjoint()).scale(0.5);
            let skew = (c - c.adjoint()) * Complex64::new(0.0, -0.5);
            h += herm.scale(rng.random::<f64>() * 2.0 - 1.0);
            h += skew.scale(rng.random::<f64>() * 2.0 - 1.0);
        }
        let shift = normalized_trace(&h);
        h -= identity(n) * shift;
        let eig = match herm_eig(&h) {
            Ok(e) => e,
            Err(_) => continue,
        };
        let spread = eig.values[n - 1] - eig.values[0];
        if spread <= 1e-8 {
            continue;
        }
        let gap = 1e-6 * spread;
        let k = (1..n).find(|&j| eig.values[j] - eig.values[j - 1] > gap).unwrap_or(n);
        if k == n {
            continue;
        }
        let beta = eig.vectors.columns(0, k).into_owned();
        let delta = eig.vectors.columns(k, n - k).into_owned();
        let x_beta = x.compress(&beta);
        let x_delta = x.compress(&delta);
        let residual = recombination_residual(x, &[(beta.clone(), x_beta.clone()), (delta.clone(), x_delta.clone())]);
        if residual <= 1e-10 * scale {
            return Ok(Split::Reducible { beta, delta, x_beta, x_delta });
        }
    }
    Ok(Split::Irreducible)
}

/// `max_i ‖x_i − Σ_j V_j y_{j,i} V_j*‖_F` for a list of `(V_j, y_j)` pieces.
pub fn recombination_residual(x: &MatrixPoint, pieces: &[(CMatrix, MatrixPoint)]) -> f64 {
    let n = x.level;
    let mut worst = 0.0f64;
    for (i, target) in x.coords.iter().enumerate() {
        let sum = pieces
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, (v, y)| acc + v * &y.coords[i] * v.adjoint());
        worst = worst.max(frobenius_distance(&sum, target));
    }
    worst
}

/// Recursively split until every piece is irreducible.
///
/// Returns `(V_j, y_j)` with `V_j` isometries whose ranges decompose `C^n`
/// and `y_j = V_j* x V_j` irreducible.
pub fn irreducible_decomposition(x: &MatrixPoint, seed: u64) -> Result<Vec<(CMatrix, MatrixPoint)>> {
    let mut done = Vec::new();
    let mut stack = vec![(identity(x.level), x.clone())];
    let mut step = 0u64;
    while let Some((v, y)) = stack.pop() {
        match irreducible_split(&y, seed.wrapping_add(step))? {
            Split::Irreducible => done.push((v, y)),
            Split::Reducible { beta, delta, x_beta, x_delta } => {
                stack.push((&v * delta, x_delta));
                stack.push((&v * beta, x_beta));
            }
        }
        step += 1;
    }
    Ok(done)
}

/// Dimension of the unital *-algebra generated by the coordinates.
pub fn star_algebra_dimension(coords: &[CMatrix]) -> usize {
    let n = coords.first().map(|c| c.nrows()).unwrap_or(0);
    if n == 0 {
        return 0;
    }
    let mut generators: Vec<CMatrix> = Vec::new();
    for c in coords {
        generators.push(c.clone());
        generators.push(c.adjoint());
    }
    let scale = coords.iter().map(frobenius).fold(1.0f64, f64::max);
    let mut basis: Vec<CMatrix> = Vec::new();
    let try_add = |m: CMatrix, basis: &mut Vec<CMatrix>| -> bool {
        let mut r = m;
        for _ in 0..2 {
            for b in basis.iter() {
                let coeff = b.dotc(&r);
                r -= b * coeff;
            }
        }
        let norm = frobenius(&r);
        if norm > 1e-9 * scale {
            basis.push(r.unscale(norm));
            true
        } else {
            false
        }
    };
    try_add(identity(n), &mut basis);
    let mut frontier: Vec<CMatrix> = basis.clone();
    while !frontier.is_empty() && basis.len() < n * n {
        let mut next = Vec::new();
        for f in &frontier {
            for g in &generators {
                let p = g * f;
                if try_add(p.clone(), &mut basis) {
                    next.push(p);
                }
            }
        }
        frontier = next;
    }
    basis.len()
}
