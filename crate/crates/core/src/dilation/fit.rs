//! Fitting atomic measures to moment tables.
//!
//! The weights are found by Douglas–Rachford splitting between the cone of
//! PSD weights and the affine set of weights matching every moment. Weights
//! are stored in orthonormal real coordinates so both projections are exact
//! Euclidean projections.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::measure::{Atom, AtomicMeasure, Site};
use super::moments::MomentTable;
use crate::error::{Error, Result};
use crate::numerics::{frobenius_distance, CMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub max_iter: usize,
    pub fit_tol: f64,
    /// Atoms whose weight has Frobenius norm below this are dropped.
    pub prune_tol: f64,
    /// Iterations between residual checks.
    pub check_every: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iter: 20000, fit_tol: 1e-7, prune_tol: 1e-12, check_every: 10 }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub measure: AtomicMeasure,
    /// `max_n ‖∫ w_n dμ − L_n‖_F` over the table.
    pub residual: f64,
    pub iterations: usize,
}

/// Roots of unity `e^{2πik/m}`.
pub fn circle_grid(m: usize) -> Vec<Site> {
    (0..m).map(|k| Site::point(vec![Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64)])).collect()
}

/// Product grid of `m`-th roots of unity in `ν` variables, first coordinate slowest.
pub fn torus_grid(m: usize, nu: usize) -> Vec<Site> {
    let total = m.checked_pow(nu as u32).unwrap_or(0);
    (0..total)
        .map(|mut idx| {
            let mut z = vec![Complex64::new(0.0, 0.0); nu];
            for slot in z.iter_mut().rev() {
                *slot = Complex64::from_polar(1.0, 2.0 * PI * (idx % m) as f64 / m as f64);
                idx /= m;
            }
            Site::point(z)
        })
        .collect()
}

/// `m` roots of unity on the outer circle followed by `m` points on the circle of radius `r`.
pub fn annulus_grid(r: f64, m: usize) -> Vec<Site> {
    let mut grid = circle_grid(m);
    grid.extend(
        (0..m).map(|k| Site::point(vec![Complex64::from_polar(r, 2.0 * PI * k as f64 / m as f64)])),
    );
    grid
}

/// `max_n ‖moment_n(μ) − L_n‖_F` over every entry of the table.
pub fn fit_residual(mu: &AtomicMeasure, targets: &MomentTable) -> Result<f64> {
    let mut worst = 0.0f64;
    for (n, value) in targets.iter() {
        worst = worst.max(frobenius_distance(&mu.moment(n, targets.kind)?, value));
    }
    Ok(worst)
}

/// Position of each atom's coordinates in the flat variable vector.
struct Layout {
    offsets: Vec<usize>,
    sizes: Vec<usize>,
    total: usize,
}

impl Layout {
    fn new(grid: &[Site], d: usize) -> Self {
        let mut offsets = Vec::with_capacity(grid.len());
        let mut sizes = Vec::with_capacity(grid.len());
        let mut total = 0;
        for site in grid {
            let m = site.size() * d;
            offsets.push(total);
            sizes.push(m);
            total += m * m;
        }
        Self { offsets, sizes, total }
    }
}

/// Orthonormal coordinates: diagonal, then `√2 Re`, `√2 Im` of the strict upper triangle.
fn herm_to_coords(h: &CMatrix, out: &mut [f64]) {
    let m = h.nrows();
    let mut c = 0;
    for i in 0..m {
        out[c] = h[(i, i)].re;
        c += 1;
    }
    for i in 0..m {
        for k in i + 1..m {
            out[c] = SQRT_2 * h[(i, k)].re;
            out[c + 1] = SQRT_2 * h[(i, k)].im;
            c += 2;
        }
    }
}

fn coords_to_herm(x: &[f64], m: usize) -> CMatrix {
    let mut h = CMatrix::zeros(m, m);
    let mut c = 0;
    for i in 0..m {
        h[(i, i)] = Complex64::new(x[c], 0.0);
        c += 1;
    }
    for i in 0..m {
        for k in i + 1..m {
            let z = Complex64::new(x[c], x[c + 1]) / SQRT_2;
            h[(i, k)] = z;
            h[(k, i)] = z.conj();
            c += 2;
        }
    }
    h
}

fn project_psd_coords(x: &mut [f64], m: usize) {
    if m == 1 {
        x[0] = x[0].max(0.0);
        return;
    }
    let h = coords_to_herm(x, m);
    let eig = SymmetricEigen::new(h);
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return;
    }
    let mut q = eig.eigenvectors.clone();
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        let s = l.max(0.0);
        q.column_mut(j).iter_mut().for_each(|z| *z *= s);
    }
    let p = &q * eig.eigenvectors.adjoint();
    herm_to_coords(&p, x);
}

/// Linear map from weight coordinates to stacked real/imaginary moment entries.
fn constraint_matrix(targets: &MomentTable, grid: &[Site], layout: &Layout) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let d = targets.dim;
    let per = 2 * d * d;
    let rows = targets.len() * per;
    let mut a = DMatrix::<f64>::zeros(rows, layout.total);
    let mut rhs = DVector::<f64>::zeros(rows);
    let entries: Vec<(&Vec<i64>, &CMatrix)> = targets.iter().collect();
    for (t, (_, value)) in entries.iter().enumerate() {
        for p in 0..d {
            for q in 0..d {
                rhs[t * per + 2 * (p * d + q)] = value[(p, q)].re;
                rhs[t * per + 2 * (p * d + q) + 1] = value[(p, q)].im;
            }
        }
    }
    let put = |a: &mut DMatrix<f64>, col: usize, t: usize, p: usize, q: usize, z: Complex64| {
        let row = t * per + 2 * (p * d + q);
        a[(row, col)] += z.re;
        a[(row + 1, col)] += z.im;
    };
    let inv = 1.0 / SQRT_2;
    for (j, site) in grid.iter().enumerate() {
        let m = layout.sizes[j];
        let base = layout.offsets[j];
        for (t, (n, _)) in entries.iter().enumerate() {
            let w = site.word(n, targets.kind)?;
            let mut col = base;
            for i in 0..m {
                let (ai, pi) = (i / d, i % d);
                put(&mut a, col, t, pi, pi, w[(ai, ai)]);
                col += 1;
            }
            for i in 0..m {
                for k in i + 1..m {
                    let (ai, pi) = (i / d, i % d);
                    let (ak, pk) = (k / d, k % d);
                    let iu = Complex64::new(0.0, 1.0);
                    // real part coordinate: (e_i e_k^T + e_k e_i^T)/√2
                    put(&mut a, col, t, pi, pk, w[(ai, ak)] * inv);
                    put(&mut a, col, t, pk, pi, w[(ak, ai)] * inv);
                    // imaginary part coordinate: i(e_i e_k^T − e_k e_i^T)/√2
                    put(&mut a, col + 1, t, pi, pk, w[(ai, ak)] * iu * inv);
                    put(&mut a, col + 1, t, pk, pi, -w[(ak, ai)] * iu * inv);
                    col += 2;
                }
            }
        }
    }
    Ok((a, rhs))
}

/// Euclidean projection onto `{x : Ax = b}` through a fixed SVD.
struct AffineProjector {
    /// Orthonormal rows spanning the row space of `A`.
    basis: DMatrix<f64>,
    /// Least-norm solution of `Ax = b`.
    x0: DVector<f64>,
}

impl AffineProjector {
    fn new(a: DMatrix<f64>, b: &DVector<f64>) -> Result<Self> {
        // nalgebra's SVD is unreliable on wide inputs; A is wide, so factor A^T = U' Σ V'^T
        let svd = SVD::new(a.transpose(), true, true);
        let (u, vt) = match (svd.v_t, svd.u) {
            (Some(vt_t), Some(u_t)) => (vt_t.transpose(), u_t.transpose()),
            _ => return Err(Error::Malformed("singular value decomposition failed".into())),
        };
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let kept: Vec<usize> =
            (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > 1e-12 * smax).collect();
        let mut basis = DMatrix::<f64>::zeros(kept.len(), vt.ncols());
        let mut x0 = DVector::<f64>::zeros(vt.ncols());
        for (row, &i) in kept.iter().enumerate() {
            basis.set_row(row, &vt.row(i));
            let coeff = u.column(i).dot(b) / svd.singular_values[i];
            x0 += vt.row(i).transpose() * coeff;
        }
        Ok(Self { basis, x0 })
    }

    fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let c = &self.basis * x;
        x - self.basis.tr_mul(&c) + &self.x0
    }
}

fn build_measure(x: &DVector<f64>, grid: &[Site], layout: &Layout, d: usize) -> AtomicMeasure {
    let atoms = grid
        .iter()
        .enumerate()
        .map(|(j, site)| {
            let m = layout.sizes[j];
            let off = layout.offsets[j];
            Atom { site: site.clone(), weight: coords_to_herm(&x.as_slice()[off..off + m * m], m) }
        })
        .collect();
    AtomicMeasure { dim: d, atoms }
}

/// Normalized, pruned candidate and its residual; `None` when the mass is singular.
fn candidate(
    x: &DVector<f64>,
    grid: &[Site],
    layout: &Layout,
    targets: &MomentTable,
    prune_tol: f64,
) -> Result<Option<(AtomicMeasure, f64)>> {
    let mut mu = build_measure(x, grid, layout, targets.dim);
    mu.prune(prune_tol);
    if mu.atoms.is_empty() || mu.normalize().is_err() {
        return Ok(None);
    }
    let res = fit_residual(&mu, targets)?;
    Ok(Some((mu, res)))
}

/// PSD weights on the grid whose moments match `targets`.
///
/// Runs until the normalized candidate is within `fit_tol / 10` or the
/// iteration cap is reached; at the cap the best candidate is accepted when
/// its residual is at most `fit_tol`.
pub fn fit_matrix_measure(targets: &MomentTable, grid: &[Site], opts: &FitOptions) -> Result<FitResult> {
    if grid.is_empty() {
        return Err(Error::GridEmpty);
    }
    targets.validate()?;
    let arity = grid[0].arity();
    if grid.iter().any(|s| s.arity() != arity) || arity != targets.nu {
        return Err(Error::ShapeMismatch("grid arity does not match the moment table".into()));
    }
    let d = targets.dim;
    let layout = Layout::new(grid, d);
    let (a, b) = constraint_matrix(targets, grid, &layout)?;
    let affine = AffineProjector::new(a, &b)?;

    // start from the uniform measure
    let total_size: usize = grid.iter().map(|s| s.size()).sum();
    let mut y = DVector::<f64>::zeros(layout.total);
    for (j, &m) in layout.sizes.iter().enumerate() {
        let start = 1.0 / total_size as f64;
        y.rows_mut(layout.offsets[j], m).fill(start);
    }

    let stop = 0.1 * opts.fit_tol;
    let every = opts.check_every.max(1);
    let mut best: Option<(AtomicMeasure, f64)> = None;
    let mut x = y.clone();
    let mut iterations = 0;
    for it in 1..=opts.max_iter {
        iterations = it;
        x.copy_from(&y);
        let slices = split_blocks(x.as_mut_slice(), &layout);
        slices.into_par_iter().for_each(|(block, m)| project_psd_coords(block, m));
        let reflected = &x * 2.0 - &y;
        let z = affine.project(&reflected);
        y += &z - &x;
        if it % every == 0 || it == opts.max_iter {
            if let Some((mu, res)) = candidate(&x, grid, &layout, targets, opts.prune_tol)? {
                let better = best.as_ref().is_none_or(|(_, r)| res < *r);
                if better {
                    best = Some((mu, res));
                }
                if res <= stop {
                    break;
                }
            }
        }
    }
    match best {
        Some((measure, residual)) if residual <= opts.fit_tol => Ok(FitResult { measure, residual, iterations }),
        Some((_, residual)) => Err(Error::Infeasible { residual, iterations }),
        None => Err(Error::Infeasible { residual: f64::INFINITY, iterations }),
    }
}

fn split_blocks<'a>(x: &'a mut [f64], layout: &Layout) -> Vec<(&'a mut [f64], usize)> {
    let mut out = Vec::with_capacity(layout.sizes.len());
    let mut rest = x;
    for &m in &layout.sizes {
        let (head, tail) = rest.split_at_mut(m * m);
        out.push((head, m));
        rest = tail;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dilation::moments::{circle_moments, WordKind};
    use crate::numerics::{herm_eig, identity, real};

    #[test]
    fn coordinates_roundtrip() {
        let h = CMatrix::from_fn(3, 3, |i, j| Complex64::new((i * j) as f64, i as f64 - j as f64));
        let h = (&h + h.adjoint()).unscale(2.0);
        let mut x = vec![0.0; 9];
        herm_to_coords(&h, &mut x);
        assert!(frobenius_distance(&coords_to_herm(&x, 3), &h) < 1e-15);
        let norm2: f64 = x.iter().map(|v| v * v).sum();
        assert!((norm2.sqrt() - crate::numerics::frobenius(&h)).abs() < 1e-12);
    }

    #[test]
    fn geometric_moments_on_circle() {
        let mut table = MomentTable::new(1, 1, WordKind::Unitary);
        table.insert(vec![0], identity(1)).unwrap();
        for k in 1..=3i64 {
            let v = CMatrix::from_element(1, 1, real(0.5f64.powi(k as i32)));
            table.insert(vec![-k], v.clone()).unwrap();
            table.insert(vec![k], v).unwrap();
        }
        let fit = fit_matrix_measure(&table, &circle_grid(64), &FitOptions::default()).unwrap();
        assert!(fit.residual <= 1e-6);
        for atom in &fit.measure.atoms {
            assert!(herm_eig(&atom.weight).unwrap().values[0] >= -1e-9);
        }
        assert!(fit.measure.normalization_defect() <= 1e-8);
    }

    #[test]
    fn too_large_first_moment_is_infeasible() {
        let t = CMatrix::from_element(1, 1, real(1.5));
        let table = circle_moments(&t, 1.0, 1).unwrap();
        let opts = FitOptions { max_iter: 2000, ..FitOptions::default() };
        assert!(matches!(fit_matrix_measure(&table, &circle_grid(64), &opts), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn recovers_measure_on_grid() {
        let grid = circle_grid(8);
        let p = CMatrix::from_row_slice(2, 2, &[real(0.3), real(0.1), real(0.1), real(0.2)]);
        let rest = (identity(2) - &p).unscale(1.0);
        let mut truth = AtomicMeasure {
            dim: 2,
            atoms: vec![
                Atom { site: grid[1].clone(), weight: p },
                Atom { site: grid[4].clone(), weight: rest },
            ],
        };
        truth.normalize().unwrap();
        let mut table = MomentTable::new(2, 1, WordKind::Unitary);
        for k in -2i64..=2 {
            table.insert(vec![k], truth.moment(&[k], WordKind::Unitary).unwrap()).unwrap();
        }
        let fit = fit_matrix_measure(&table, &grid, &FitOptions::default()).unwrap();
        assert!(fit.residual <= 1e-7);
    }

    #[test]
    fn empty_grid() {
        let table = circle_moments(&CMatrix::zeros(1, 1), 1.0, 1).unwrap();
        assert!(matches!(fit_matrix_measure(&table, &[], &FitOptions::default()), Err(Error::GridEmpty)));
    }
}
