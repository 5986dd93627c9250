//! End-to-end constructions: moments → measure or Toeplitz kernel → dilation → verification.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::{cauchy_transform_matrix, quadrature_measure, BoundaryCurve};
use crate::dilation::fit::{annulus_grid, fit_matrix_measure, torus_grid, FitOptions};
use crate::dilation::measure::{choi_from_components, Atom, AtomicMeasure};
use crate::dilation::moments::{circle_moments, regular_moments, MomentTable, WordKind};
use crate::dilation::rotation::{clock_shift_grid, reduce_fraction, rotation_q};
use crate::dilation::{assemble_atomic_dilation, toeplitz_gns_unitary, Declaration, Dilation, GeneratorClass, Provenance};
use crate::error::{Error, Result};
use crate::matrix_convex::{caratheodory_reduce_indexed, MatrixConvexCombination, MatrixPoint, Term};
use crate::numerics::{ensure_square, frobenius, frobenius_distance, identity, mat_pow, CMatrix, Tolerances};
use crate::verify::{dimension_report, verify_dilation, VerificationReport};

/// Everything a pipeline produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub dilation: Dilation,
    pub targets: MomentTable,
    pub report: VerificationReport,
    pub fit_residual: Option<f64>,
    pub quadrature: Option<QuadratureStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureStats {
    pub pre_defect: f64,
    pub clipped_mass: f64,
}

fn finish(
    mut dilation: Dilation,
    targets: MomentTable,
    moment_tol: f64,
    r_subhom: usize,
    fit_residual: Option<f64>,
    quadrature: Option<QuadratureStats>,
) -> Result<Outcome> {
    let report = verify_dilation(&dilation, &targets, &dilation.declaration, moment_tol)?;
    let dim = dimension_report(&dilation, targets.dim, targets.operator_system_dim(), r_subhom);
    let report = report.with_dimension(dim);
    dilation.residuals = Some(report.residuals());
    Ok(Outcome { dilation, targets, report, fit_residual, quadrature })
}

/// `T^k = ρ P_H U^k|_H` for `0 ≤ k ≤ N` through the block Toeplitz kernel.
pub fn dilate_circle(t: &CMatrix, rho: f64, order: usize, tol: &Tolerances) -> Result<Outcome> {
    let targets = circle_moments(t, rho, order)?;
    let dil = toeplitz_gns_unitary(&targets, tol)?;
    finish(dil, targets, tol.residual_tol, 1, None, None)
}

/// Hermitian coordinates `(I, Re w_n, Im w_n)` of an atom's site, one per canonical index.
fn site_point(atom: &Atom, targets: &MomentTable) -> Result<MatrixPoint> {
    let b = atom.site.size();
    let mut coords = vec![identity(b)];
    for n in targets.canonical_indices() {
        let w = atom.site.word(&n, targets.kind)?;
        coords.push((&w + w.adjoint()).unscale(2.0));
        coords.push((&w - w.adjoint()) * Complex64::new(0.0, -0.5));
    }
    MatrixPoint::new(coords, true)
}

/// Carathéodory reduction of the matrix convex combination induced by a measure.
///
/// Rank-one components of the weights are the coefficients; the points are
/// the Hermitian parts of the operator-system basis evaluated at each site.
pub fn reduce_measure(mu: &AtomicMeasure, targets: &MomentTable, tol: &Tolerances) -> Result<AtomicMeasure> {
    let comps = mu.components(tol)?;
    let points: Vec<MatrixPoint> = mu.atoms.iter().map(|a| site_point(a, targets)).collect::<Result<_>>()?;
    let terms = comps.iter().map(|c| Term { gamma: c.gamma.clone(), point: points[c.atom].clone() }).collect();
    let combo = MatrixConvexCombination { target_level: mu.dim, terms };
    let (reduced, sources) = caratheodory_reduce_indexed(&combo)?;
    let mut grouped: Vec<Vec<CMatrix>> = vec![Vec::new(); mu.atoms.len()];
    for (term, &src) in reduced.terms.iter().zip(&sources) {
        grouped[comps[src].atom].push(term.gamma.clone());
    }
    let d = mu.dim;
    let atoms = mu
        .atoms
        .iter()
        .zip(&grouped)
        .filter(|(_, g)| !g.is_empty())
        .map(|(a, g)| Atom { site: a.site.clone(), weight: choi_from_components(g, a.site.size(), d) })
        .collect();
    let mut out = AtomicMeasure::new(d, atoms)?;
    out.normalize()?;
    Ok(out)
}

fn fit_reduce_assemble(
    targets: MomentTable,
    grid: &[crate::dilation::Site],
    declaration: Declaration,
    r_subhom: usize,
    tol: &Tolerances,
    opts: &FitOptions,
) -> Result<Outcome> {
    let fit = fit_matrix_measure(&targets, grid, opts)?;
    let reduced = reduce_measure(&fit.measure, &targets, tol)?;
    let mut dil = assemble_atomic_dilation(&reduced, declaration, tol)?;
    dil.provenance = Provenance::Fit;
    let moment_tol = tol.residual_tol.max(2.0 * fit.residual);
    finish(dil, targets, moment_tol, r_subhom, Some(fit.residual), None)
}

/// Commuting unitaries with `T(n) = P_H U^n|_H` for `n ∈ [−N, N]^ν`, fitted on a torus grid.
pub fn dilate_regular(ts: &[CMatrix], order: usize, grid: usize, tol: &Tolerances, opts: &FitOptions) -> Result<Outcome> {
    let targets = regular_moments(ts, order)?;
    let nu = ts.len();
    fit_reduce_assemble(targets, &torus_grid(grid, nu), Declaration::commuting(nu, GeneratorClass::Unitary), 1, tol, opts)
}

/// Laurent moments `T^k`, `|k| ≤ N`, of an invertible operator.
pub fn laurent_moments(t: &CMatrix, order: usize) -> Result<MomentTable> {
    let d = ensure_square(t)?;
    let inv = t.clone().try_inverse().ok_or_else(|| Error::Malformed("operator is not invertible".into()))?;
    let mut table = MomentTable::new(d, 1, WordKind::Laurent);
    table.insert(vec![0], identity(d))?;
    for k in 1..=order {
        table.insert(vec![k as i64], mat_pow(t, k as u32))?;
        table.insert(vec![-(k as i64)], mat_pow(&inv, k as u32))?;
    }
    Ok(table)
}

/// Normal `N` with spectrum on `∂A_r` and `T^k = P_H N^k|_H` for `|k| ≤ N`.
pub fn dilate_annulus(t: &CMatrix, r: f64, order: usize, grid: usize, tol: &Tolerances, opts: &FitOptions) -> Result<Outcome> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Malformed("annulus radius must lie in (0, 1)".into()));
    }
    let targets = laurent_moments(t, order)?;
    fit_reduce_assemble(targets, &annulus_grid(r, grid), Declaration::commuting(1, GeneratorClass::Normal), 1, tol, opts)
}

/// Table of `T₁ⁿT₂ᵐ`, `0 ≤ n, m ≤ N`, with adjoints at the negated indices.
pub fn q_commuting_moments(t1: &CMatrix, t2: &CMatrix, order: usize) -> Result<MomentTable> {
    let d = ensure_square(t1)?;
    if ensure_square(t2)? != d {
        return Err(Error::ShapeMismatch("operators must have equal size".into()));
    }
    let mut table = MomentTable::new(d, 2, WordKind::Unitary);
    for n in 0..=order as u32 {
        for m in 0..=order as u32 {
            let v = mat_pow(t1, n) * mat_pow(t2, m);
            if n + m > 0 {
                table.insert(vec![-(n as i64), -(m as i64)], v.adjoint())?;
            }
            table.insert(vec![n as i64, m as i64], v)?;
        }
    }
    Ok(table)
}

/// q-commuting unitaries `U₂U₁ = qU₁U₂`, `q = e^{2πi a/b}`, with `T₁ⁿT₂ᵐ = P_H U₁ⁿU₂ᵐ|_H`.
#[allow(clippy::too_many_arguments)]
pub fn dilate_qcommute(
    t1: &CMatrix,
    t2: &CMatrix,
    a: i64,
    b: usize,
    order: usize,
    grid: usize,
    tol: &Tolerances,
    opts: &FitOptions,
) -> Result<Outcome> {
    if b == 0 {
        return Err(Error::Malformed("rotation denominator must be positive".into()));
    }
    let (a, b) = reduce_fraction(a, b);
    let q = rotation_q(a, b);
    let defect = frobenius_distance(&(t2 * t1), &(t1 * t2 * q));
    if defect > 1e-10 * (frobenius(t1) * frobenius(t2)).max(1.0) {
        return Err(Error::NotCommuting { defect });
    }
    let targets = q_commuting_moments(t1, t2, order)?;
    fit_reduce_assemble(targets, &clock_shift_grid(a, b, grid), Declaration::q_commuting(q), b, tol, opts)
}

/// Targets `(T^k + (C z̄^k)(T)*)/2`, `0 ≤ k ≤ degree`, with the Cauchy transform on the same nodes.
pub fn boundary_moments(t: &CMatrix, curve: &BoundaryCurve, nodes: usize, degree: usize) -> Result<MomentTable> {
    let d = ensure_square(t)?;
    let samples = curve.samples(nodes);
    let mut table = MomentTable::new(d, 1, WordKind::Laurent);
    table.insert(vec![0], identity(d))?;
    for k in 1..=degree {
        let f: Vec<Complex64> = samples.iter().map(|s| s.z.powu(k as u32)).collect();
        let c = cauchy_transform_matrix(&f, &samples, t)?;
        table.insert(vec![k as i64], (mat_pow(t, k as u32) + c.adjoint()).unscale(2.0))?;
    }
    Ok(table)
}

/// Normal `N` with spectrum on the curve and `f(T) + (C f̄)(T)* = 2 P_H f(N)|_H` for `f = z^k`.
pub fn dilate_boundary(t: &CMatrix, curve: &BoundaryCurve, nodes: usize, degree: usize, tol: &Tolerances) -> Result<Outcome> {
    let quad = quadrature_measure(t, curve, nodes)?;
    let targets = boundary_moments(t, curve, nodes, degree)?;
    let reduced = reduce_measure(&quad.measure, &targets, tol)?;
    let dil = assemble_atomic_dilation(&reduced, Declaration::commuting(1, GeneratorClass::Normal), tol)?;
    let stats = QuadratureStats { pre_defect: quad.pre_defect, clipped_mass: quad.clipped_mass };
    // normalization moves each moment by about the pre-normalization defect
    let moment_tol = tol.residual_tol.max(4.0 * (quad.pre_defect + quad.clipped_mass));
    finish(dil, targets, moment_tol, 1, None, Some(stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c64, from_row_major, real};

    #[test]
    fn circle_pipeline_berger() {
        let t = from_row_major(2, 2, &[real(0.0), real(2.0), real(0.0), real(0.0)]);
        let out = dilate_circle(&t, 2.0, 3, &Tolerances::default()).unwrap();
        assert!(out.report.pass, "{:?}", out.report);
        assert!(out.report.dimension.unwrap().slack >= 0);
    }

    #[test]
    fn qcommute_fixture() {
        let q = rotation_q(1, 2);
        let t1 = from_row_major(2, 2, &[real(1.0), real(0.0), real(0.0), q]);
        let t2 = from_row_major(2, 2, &[real(0.0), real(1.0), real(0.0), real(0.0)]);
        let out = dilate_qcommute(&t1, &t2, 1, 2, 1, 8, &Tolerances::default(), &FitOptions::default()).unwrap();
        assert!(out.report.pass, "{:?}", out.report);
        assert!(out.dilation.k <= 256);
    }

    #[test]
    fn regular_pair_of_diagonals() {
        let t1 = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(0.3, 0.1), real(-0.2)]));
        let t2 = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![real(0.25), c64(0.0, 0.4)]));
        let out = dilate_regular(&[t1, t2], 1, 8, &Tolerances::default(), &FitOptions::default()).unwrap();
        assert!(out.report.pass, "{:?}", out.report);
        let dim = out.report.dimension.unwrap();
        assert!(dim.slack >= 0);
    }

    #[test]
    fn annulus_from_unitary() {
        let c = (0.5f64).sqrt();
        let q = from_row_major(2, 2, &[real(c), real(c), real(-c), real(c)]);
        let lam = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::from_polar(1.0, std::f64::consts::PI / 4.0),
            Complex64::from_polar(1.0, std::f64::consts::PI),
        ]));
        let u = &q * lam * q.adjoint();
        let out = dilate_annulus(&u, 0.5, 3, 16, &Tolerances::default(), &FitOptions::default()).unwrap();
        assert!(out.report.pass, "{:?}", out.report);
    }

    #[test]
    fn boundary_disc() {
        let t = from_row_major(2, 2, &[real(0.1), real(0.5), real(0.0), c64(0.0, -0.2)]);
        let out = dilate_boundary(&t, &BoundaryCurve::unit_disc(), 64, 3, &Tolerances::default()).unwrap();
        assert!(out.report.pass, "{:?}", out.report);
        assert!(out.report.dimension.unwrap().slack >= 0);
    }
}
