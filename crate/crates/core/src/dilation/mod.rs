//! Dilations from moment data: block Toeplitz GNS, Naimark assembly of
//! atomic measures, and convex fitting of atomic measures.

mod assemble;
pub mod fit;
mod gns;
pub mod measure;
pub mod moments;
pub mod rotation;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::json::{cmatrix, cmatrix_vec, complex};
use crate::numerics::{c64, CMatrix};

pub use assemble::assemble_atomic_dilation;
pub use fit::{circle_grid, fit_matrix_measure, torus_grid, annulus_grid, FitOptions, FitResult};
pub use gns::{block_toeplitz, toeplitz_gns_unitary};
pub use measure::{Atom, AtomicMeasure, Site};
pub use moments::{circle_moments, eval_word, regular_moments, MomentTable, WordKind};
pub use rotation::{clock_shift_grid, clock_shift_irrep, rational_rotation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Gns,
    Naimark,
    Fit,
}

/// What each generator is declared to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorClass {
    Unitary,
    Normal,
}

/// `G_{lhs[0]} G_{lhs[1]} ⋯ = factor · G_{rhs[0]} G_{rhs[1]} ⋯`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub lhs: Vec<usize>,
    pub rhs: Vec<usize>,
    #[serde(with = "complex")]
    pub factor: Complex64,
}

impl Relation {
    /// `G_j G_i = q G_i G_j`.
    pub fn q_commute(i: usize, j: usize, q: Complex64) -> Self {
        Self { lhs: vec![j, i], rhs: vec![i, j], factor: q }
    }
}

/// Declared structure of a generator tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Declaration {
    pub class: GeneratorClass,
    pub relations: Vec<Relation>,
}

impl Declaration {
    /// Pairwise commuting generators.
    pub fn commuting(nu: usize, class: GeneratorClass) -> Self {
        let mut relations = Vec::new();
        for i in 0..nu {
            for j in i + 1..nu {
                relations.push(Relation::q_commute(i, j, c64(1.0, 0.0)));
            }
        }
        Self { class, relations }
    }

    /// Two unitaries with `U₂U₁ = q U₁U₂`.
    pub fn q_commuting(q: Complex64) -> Self {
        Self { class: GeneratorClass::Unitary, relations: vec![Relation::q_commute(0, 1, q)] }
    }
}

/// Largest defects found by the last verification, stored alongside the dilation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub isometry: f64,
    pub generator: f64,
    pub relation: f64,
    pub moment: f64,
}

/// Isometry `V: C^d → C^K` and generators on `C^K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dilation {
    #[serde(rename = "V", with = "cmatrix")]
    pub v: CMatrix,
    #[serde(with = "cmatrix_vec")]
    pub generators: Vec<CMatrix>,
    #[serde(rename = "K")]
    pub k: usize,
    pub provenance: Provenance,
    pub declaration: Declaration,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residuals: Option<Residuals>,
}

impl Dilation {
    pub fn dim(&self) -> usize {
        self.v.ncols()
    }

    /// `V* w(G) V` for the word of `index`.
    pub fn compressed_word(&self, index: &[i64], kind: WordKind) -> crate::Result<CMatrix> {
        let w = eval_word(index, &self.generators, kind)?;
        Ok(self.v.adjoint() * w * &self.v)
    }
}
