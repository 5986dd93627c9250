//! Dense complex linear-algebra kernels and the tolerance policy.
//!
//! Everything downstream (GNS factorizations, Naimark assembly, the measure
//! fit, Carathéodory elimination) goes through the handful of routines here,
//! so they are written to be deterministic: eigenvalues come back ascending
//! with ties broken by original index, and complements of subspaces are
//! produced by pivoted Gram–Schmidt over the standard basis.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense complex matrix used for every operator in the crate.
pub type CMatrix = DMatrix<Complex64>;

/// Relative Hermitian defect accepted before symmetrization.
pub const HERM_TOL: f64 = 1e-10;

/// Numerical thresholds used across the pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative eigenvalue cutoff for numerical rank.
    pub rank_tol: f64,
    /// Allowed negative eigenvalue magnitude, relative to the matrix norm.
    pub psd_tol: f64,
    /// Moment-match acceptance threshold.
    pub residual_tol: f64,
    /// Convergence threshold of the measure fit.
    pub fit_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_tol: 1e-10,
            psd_tol: 1e-9,
            residual_tol: 1e-8,
            fit_tol: 1e-7,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [self.rank_tol, self.psd_tol, self.residual_tol, self.fit_tol];
        if all.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::Malformed("tolerances must be finite and positive".into()));
        }
        if self.rank_tol > self.psd_tol {
            return Err(Error::Malformed("rank_tol must not exceed psd_tol".into()));
        }
        Ok(())
    }
}

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Frobenius norm of `a - b`; shapes must agree.
pub fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// `(A + A*) / 2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

pub fn ensure_square(a: &CMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NonSquare { rows: a.nrows(), cols: a.ncols() });
    }
    Ok(a.nrows())
}

/// `‖A*A − I‖_F`.
pub fn isometry_defect(a: &CMatrix) -> f64 {
    frobenius_distance(&(a.adjoint() * a), &identity(a.ncols()))
}

/// `‖A*A − I‖_F`, for square `A` the unitarity defect.
pub fn unitarity_defect(a: &CMatrix) -> f64 {
    isometry_defect(a)
}

/// `‖A*A − AA*‖_F`.
pub fn normality_defect(a: &CMatrix) -> f64 {
    frobenius_distance(&(a.adjoint() * a), &(a * a.adjoint()))
}

/// Nonnegative integer power by repeated squaring.
pub fn mat_pow(a: &CMatrix, k: u32) -> CMatrix {
    let n = a.nrows();
    let mut result = identity(n);
    let mut base = a.clone();
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Build a matrix from row-major entries.
pub fn from_row_major(rows: usize, cols: usize, data: &[Complex64]) -> CMatrix {
    CMatrix::from_row_slice(rows, cols, data)
}

/// Largest absolute value of a finite list; 0 for empty input.
fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermEig {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub vectors: CMatrix,
}

impl HermEig {
    pub fn reconstruct(&self) -> CMatrix {
        let scaled = self.scaled_columns(|l| l);
        &scaled * self.vectors.adjoint()
    }

    /// `Q · diag(f(λ))` as a new matrix.
    fn scaled_columns(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let mut q = self.vectors.clone();
        for (j, &l) in self.values.iter().enumerate() {
            let s = f(l);
            q.column_mut(j).iter_mut().for_each(|z| *z *= s);
        }
        q
    }

    /// `Q f(Λ) Q*` for a real spectral function `f`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let scaled = self.scaled_columns(f);
        hermitian_part(&(&scaled * self.vectors.adjoint()))
    }
}

/// Eigen-decomposition of a Hermitian matrix with ascending eigenvalues.
///
/// The input is symmetrized as `(A + A*)/2` first; inputs whose Hermitian
/// defect exceeds [`HERM_TOL`] relative to `‖A‖_F` are rejected.
pub fn herm_eig(a: &CMatrix) -> Result<HermEig> {
    let n = ensure_square(a)?;
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Malformed("matrix has non-finite entries".into()));
    }
    let norm = frobenius(a);
    let defect = frobenius_distance(a, &a.adjoint());
    if defect > HERM_TOL * norm.max(f64::MIN_POSITIVE) && defect > 0.0 {
        return Err(Error::NotHermitian { defect });
    }
    if n == 0 {
        return Ok(HermEig { values: vec![], vectors: CMatrix::zeros(0, 0) });
    }
    let sym = hermitian_part(a);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps original index order among ties
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        fix_phase(col.as_mut_slice());
        vectors.set_column(dst, &col);
    }
    Ok(HermEig { values, vectors })
}

/// Rotate a vector so that its first entry of maximal modulus is real positive.
fn fix_phase(v: &mut [Complex64]) {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, z) in v.iter().enumerate() {
        // small relative slack so near-ties resolve to the lowest index
        if z.norm() > best_abs * (1.0 + 1e-12) {
            best_abs = z.norm();
            best = i;
        }
    }
    if best_abs > 0.0 {
        let phase = v[best].conj() / best_abs;
        v.iter_mut().for_each(|z| *z *= phase);
    }
}

/// Rank-revealing factorization `M = W*W` of a PSD matrix.
#[derive(Debug, Clone)]
pub struct RankFactor {
    /// `r × m` factor; rows are ordered by decreasing eigenvalue.
    pub w: CMatrix,
    pub rank: usize,
    /// Eigenvalues that were discarded (below the relative cutoff).
    pub discarded: Vec<f64>,
}

/// Factor a PSD matrix as `W*W` keeping eigenvalues above `rank_tol · λ_max`.
pub fn numerical_rank_factor(m: &CMatrix, tol: &Tolerances) -> Result<RankFactor> {
    let dim = ensure_square(m)?;
    let eig = herm_eig(m)?;
    let scale = max_abs(&eig.values);
    let lambda_max = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    if let Some(&min) = eig.values.first() {
        if min < -tol.psd_tol * scale {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
    }
    let cutoff = tol.rank_tol * lambda_max;
    let kept: Vec<usize> = (0..dim).rev().filter(|&j| eig.values[j] > cutoff && eig.values[j] > 0.0).collect();
    let discarded = (0..dim).filter(|j| !kept.contains(j)).map(|j| eig.values[j]).collect();
    let mut w = CMatrix::zeros(kept.len(), dim);
    for (row, &j) in kept.iter().enumerate() {
        let s = eig.values[j].sqrt();
        for col in 0..dim {
            w[(row, col)] = eig.vectors[(col, j)].conj() * s;
        }
    }
    Ok(RankFactor { rank: kept.len(), w, discarded })
}

/// Nearest PSD matrix in Frobenius norm: clip negative eigenvalues to zero.
pub fn psd_project(a: &CMatrix) -> Result<CMatrix> {
    ensure_square(a)?;
    let eig = herm_eig(a)?;
    if eig.values.first().is_none_or(|&l| l >= 0.0) {
        return Ok(hermitian_part(a));
    }
    Ok(eig.apply(|l| l.max(0.0)))
}

/// `A^{-1/2}` for a positive definite Hermitian matrix.
pub fn inv_sqrt_pd(a: &CMatrix) -> Result<CMatrix> {
    let eig = herm_eig(a)?;
    if let (Some(&min), Some(&max)) = (eig.values.first(), eig.values.last()) {
        if min <= 1e-14 * max.abs() {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
    }
    Ok(eig.apply(|l| 1.0 / l.sqrt()))
}

/// Orthonormal basis of the orthogonal complement of the columns of `basis`.
///
/// Built by pivoted Gram–Schmidt over the standard basis: at each step the
/// standard basis vector with the largest residual (smallest index on ties)
/// is orthogonalized and appended.
pub fn complement_basis(basis: &CMatrix) -> CMatrix {
    let r = basis.nrows();
    let s = basis.ncols();
    let mut current = basis.clone();
    let mut added = CMatrix::zeros(r, r.saturating_sub(s));
    for step in 0..r.saturating_sub(s) {
        // residual projector I - C C*
        let residual = identity(r) - &current * current.adjoint();
        let mut best = 0;
        let mut best_norm = -1.0;
        for i in 0..r {
            let norm = residual.column(i).norm();
            if norm > best_norm {
                best_norm = norm;
                best = i;
            }
        }
        let mut v: nalgebra::DVector<Complex64> = residual.column(best).into_owned();
        // second pass against loss of orthogonality
        let proj = current.adjoint() * &v;
        v -= &current * proj;
        let norm = v.norm();
        v.iter_mut().for_each(|z| *z /= norm);
        added.set_column(step, &v);
        let last = current.ncols();
        current = current.insert_column(last, Complex64::new(0.0, 0.0));
        current.set_column(last, &v);
    }
    added
}

/// Extend a partial isometry to a unitary on the whole space.
///
/// `u0` must map the span of `domain_basis` isometrically onto the span of
/// `range_basis`; the result agrees with `u0` there and sends the
/// complement of the domain onto the complement of the range, pairing the
/// complement bases produced by [`complement_basis`] column by column.
pub fn complete_isometry_to_unitary(
    u0: &CMatrix,
    domain_basis: &CMatrix,
    range_basis: &CMatrix,
) -> Result<CMatrix> {
    let r = ensure_square(u0)?;
    if domain_basis.nrows() != r || range_basis.nrows() != r {
        return Err(Error::DimensionMismatch(format!(
            "bases must have {r} rows (got {} and {})",
            domain_basis.nrows(),
            range_basis.nrows()
        )));
    }
    if domain_basis.ncols() != range_basis.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "domain has dimension {} but range has dimension {}",
            domain_basis.ncols(),
            range_basis.ncols()
        )));
    }
    let s = domain_basis.ncols();
    let tol = 1e-10 * (s.max(1) as f64);
    for basis in [domain_basis, range_basis] {
        let defect = isometry_defect(basis);
        if defect > tol {
            return Err(Error::NotIsometric { defect });
        }
    }
    let image = u0 * domain_basis;
    let defect = isometry_defect(&image);
    if defect > tol {
        return Err(Error::NotIsometric { defect });
    }
    let outside = frobenius_distance(&(range_basis * (range_basis.adjoint() * &image)), &image);
    if outside > tol {
        return Err(Error::NotIsometric { defect: outside });
    }
    let domain_c = complement_basis(domain_basis);
    let range_c = complement_basis(range_basis);
    Ok(&image * domain_basis.adjoint() + &range_c * domain_c.adjoint())
}
