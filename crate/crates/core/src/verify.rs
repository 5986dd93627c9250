//! Residual checks of constructed dilations and dimension accounting.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dilation::moments::{eval_word, MomentTable};
use crate::dilation::{Declaration, Dilation, GeneratorClass, Residuals};
use crate::error::{Error, Result};
use crate::numerics::{frobenius, frobenius_distance, isometry_defect, normality_defect, unitarity_defect, CMatrix};

/// Tolerance for the structural defects (isometry, generators, relations).
pub const STRUCTURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentResidual {
    pub index: Vec<i64>,
    pub residual: f64,
}

/// `K` against the bound `r² d³ (dim S + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionReport {
    #[serde(rename = "K")]
    pub k: usize,
    pub paper_bound: usize,
    pub slack: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    #[serde(rename = "K")]
    pub k: usize,
    pub isometry_defect: f64,
    pub generator_defects: Vec<f64>,
    pub relation_defects: Vec<f64>,
    pub moment_residuals: Vec<MomentResidual>,
    pub max_moment_residual: f64,
    pub structure_tol: f64,
    pub moment_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<DimensionReport>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn residuals(&self) -> Residuals {
        let max = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max);
        Residuals {
            isometry: self.isometry_defect,
            generator: max(&self.generator_defects),
            relation: max(&self.relation_defects),
            moment: self.max_moment_residual,
        }
    }

    pub fn with_dimension(mut self, dim: DimensionReport) -> Self {
        self.pass = self.pass && dim.slack >= 0;
        self.dimension = Some(dim);
        self
    }
}

fn product(gens: &[CMatrix], word: &[usize]) -> Result<CMatrix> {
    let k = gens.first().map(|g| g.nrows()).unwrap_or(0);
    let mut out = CMatrix::identity(k, k);
    for &i in word {
        let g = gens.get(i).ok_or_else(|| Error::ShapeMismatch(format!("relation names generator {i}")))?;
        out *= g;
    }
    Ok(out)
}

/// Check a dilation against moment targets and declared relations.
///
/// Passes when the structural defects are at most [`STRUCTURE_TOL`] and every
/// moment residual is at most `moment_tol`.
pub fn verify_dilation(
    dil: &Dilation,
    targets: &MomentTable,
    declaration: &Declaration,
    moment_tol: f64,
) -> Result<VerificationReport> {
    let k = dil.v.nrows();
    if dil.k != k || dil.generators.iter().any(|g| g.nrows() != k || g.ncols() != k) {
        return Err(Error::ShapeMismatch(format!("dilation space has dimension {k} but K = {}", dil.k)));
    }
    if dil.v.ncols() != targets.dim {
        return Err(Error::ShapeMismatch(format!(
            "V maps from dimension {} but targets have dimension {}",
            dil.v.ncols(),
            targets.dim
        )));
    }
    if dil.generators.len() != targets.nu {
        return Err(Error::ShapeMismatch(format!(
            "{} generators for a table in {} variables",
            dil.generators.len(),
            targets.nu
        )));
    }
    let generator_defects = dil
        .generators
        .iter()
        .map(|g| match declaration.class {
            GeneratorClass::Unitary => unitarity_defect(g),
            GeneratorClass::Normal => normality_defect(g),
        })
        .collect::<Vec<_>>();
    let relation_defects = declaration
        .relations
        .iter()
        .map(|r| Ok(frobenius(&(product(&dil.generators, &r.lhs)? - product(&dil.generators, &r.rhs)? * r.factor))))
        .collect::<Result<Vec<_>>>()?;
    let entries: Vec<(&Vec<i64>, &CMatrix)> = targets.iter().collect();
    let moment_residuals = entries
        .par_iter()
        .map(|(n, value)| {
            let w = eval_word(n, &dil.generators, targets.kind)?;
            let got = dil.v.adjoint() * w * &dil.v;
            Ok(MomentResidual { index: (*n).clone(), residual: frobenius_distance(&got, value) })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_moment_residual = moment_residuals.iter().map(|m| m.residual).fold(0.0, f64::max);
    let isometry = isometry_defect(&dil.v);
    let structural = std::iter::once(isometry).chain(generator_defects.iter().copied()).chain(relation_defects.iter().copied());
    let pass = structural.clone().all(|x| x <= STRUCTURE_TOL) && max_moment_residual <= moment_tol;
    Ok(VerificationReport {
        k,
        isometry_defect: isometry,
        generator_defects,
        relation_defects,
        moment_residuals,
        max_moment_residual,
        structure_tol: STRUCTURE_TOL,
        moment_tol,
        dimension: None,
        pass,
    })
}

/// `K` against `r² d³ (dim S + 1)`.
pub fn dimension_report(dil: &Dilation, d: usize, dim_s: usize, r_subhom: usize) -> DimensionReport {
    let paper_bound = r_subhom * r_subhom * d * d * d * (dim_s + 1);
    DimensionReport { k: dil.k, paper_bound, slack: paper_bound as i64 - dil.k as i64 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dilation::measure::{Atom, AtomicMeasure, Site};
    use crate::dilation::{assemble_atomic_dilation, circle_moments, toeplitz_gns_unitary, WordKind};
    use crate::numerics::{identity, real, Tolerances};

    #[test]
    fn gns_half_passes() {
        let t = CMatrix::from_element(1, 1, real(0.5));
        let table = circle_moments(&t, 1.0, 1).unwrap();
        let dil = toeplitz_gns_unitary(&table, &Tolerances::default()).unwrap();
        let rep = verify_dilation(&dil, &table, &dil.declaration, 1e-8).unwrap();
        assert!(rep.pass);
        assert!(rep.isometry_defect <= 1e-10);
        assert!(rep.generator_defects.iter().all(|&x| x <= 1e-10));
        assert!(rep.max_moment_residual <= 1e-10);
    }

    #[test]
    fn scaled_v_fails() {
        let t = crate::numerics::from_row_major(2, 2, &[real(0.1), real(0.4), real(0.0), real(-0.3)]);
        let table = circle_moments(&t, 1.0, 2).unwrap();
        let mut dil = toeplitz_gns_unitary(&table, &Tolerances::default()).unwrap();
        dil.v = dil.v.scale(1.01);
        let rep = verify_dilation(&dil, &table, &dil.declaration, 1e-8).unwrap();
        assert!(!rep.pass);
        let expected = 0.0201 * 2f64.sqrt();
        assert!((rep.isometry_defect - expected).abs() < 1e-6);
    }

    #[test]
    fn two_atom_dilation_is_exact() {
        let half = identity(2).scale(0.5);
        let mu = AtomicMeasure::new(
            2,
            vec![
                Atom { site: Site::point(vec![real(1.0)]), weight: half.clone() },
                Atom { site: Site::point(vec![real(-1.0)]), weight: half },
            ],
        )
        .unwrap();
        let decl = Declaration::commuting(1, GeneratorClass::Unitary);
        let dil = assemble_atomic_dilation(&mu, decl.clone(), &Tolerances::default()).unwrap();
        let mut table = MomentTable::new(2, 1, WordKind::Unitary);
        for k in -2i64..=2 {
            table.insert(vec![k], mu.moment(&[k], WordKind::Unitary).unwrap()).unwrap();
        }
        let rep = verify_dilation(&dil, &table, &decl, 1e-12).unwrap();
        assert!(rep.pass);
        assert!(rep.max_moment_residual <= 1e-12);
    }

    #[test]
    fn shape_mismatch() {
        let table = circle_moments(&CMatrix::zeros(2, 2), 1.0, 1).unwrap();
        let other = circle_moments(&CMatrix::zeros(1, 1), 1.0, 1).unwrap();
        let dil = toeplitz_gns_unitary(&other, &Tolerances::default()).unwrap();
        assert!(matches!(verify_dilation(&dil, &table, &dil.declaration, 1e-8), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn dimension_examples() {
        let t = crate::numerics::from_row_major(2, 2, &[real(0.0), real(0.5), real(0.0), real(0.0)]);
        let dil = toeplitz_gns_unitary(&circle_moments(&t, 1.0, 3).unwrap(), &Tolerances::default()).unwrap();
        let rep = dimension_report(&dil, 2, 7, 1);
        assert_eq!(rep.paper_bound, 64);
        assert!(dil.k <= 8 && rep.slack >= 56);
        let one = toeplitz_gns_unitary(&circle_moments(&CMatrix::from_element(1, 1, real(0.5)), 1.0, 1).unwrap(), &Tolerances::default())
            .unwrap();
        let rep = dimension_report(&one, 1, 3, 1);
        assert_eq!(rep.paper_bound, 4);
        assert!(one.k <= 2);
        assert_eq!(dimension_report(&one, 2, 7, 2).paper_bound, 256);
    }
}
