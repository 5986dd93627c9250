//! Atomic matrix-valued measures over points or irreducible representations.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::moments::{eval_word, WordKind};
use crate::error::{Error, Result};
use crate::json::{cmatrix, cmatrix_vec, complex_vec};
use crate::numerics::{
    ensure_square, frobenius, frobenius_distance, herm_eig, identity, inv_sqrt_pd, unitarity_defect, CMatrix,
    Tolerances,
};

/// Where an atom sits: a point of `C^ν` or a `b`-dimensional irreducible representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Site {
    Point {
        #[serde(with = "complex_vec")]
        z: Vec<Complex64>,
    },
    Irrep {
        #[serde(with = "cmatrix_vec")]
        images: Vec<CMatrix>,
    },
}

impl Site {
    pub fn point(z: Vec<Complex64>) -> Self {
        Site::Point { z }
    }

    /// Size `b` of the representation (1 for points).
    pub fn size(&self) -> usize {
        match self {
            Site::Point { .. } => 1,
            Site::Irrep { images } => images.first().map(|m| m.nrows()).unwrap_or(1),
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Site::Point { z } => z.len(),
            Site::Irrep { images } => images.len(),
        }
    }

    /// Generator images as `b × b` matrices.
    pub fn images(&self) -> Vec<CMatrix> {
        match self {
            Site::Point { z } => z.iter().map(|&w| CMatrix::from_element(1, 1, w)).collect(),
            Site::Irrep { images } => images.clone(),
        }
    }

    pub fn word(&self, index: &[i64], kind: WordKind) -> Result<CMatrix> {
        eval_word(index, &self.images(), kind)
    }

    fn validate(&self) -> Result<()> {
        if let Site::Irrep { images } = self {
            let b = self.size();
            for g in images {
                if ensure_square(g)? != b {
                    return Err(Error::ShapeMismatch("irrep images must share one size".into()));
                }
                let defect = unitarity_defect(g);
                if defect > 1e-10 {
                    return Err(Error::NotIsometric { defect });
                }
            }
        }
        Ok(())
    }
}

/// A site with its PSD weight: `d × d` for points, a `bd × bd` Choi block for irreps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    #[serde(flatten)]
    pub site: Site,
    #[serde(with = "cmatrix")]
    pub weight: CMatrix,
}

/// `(a, c)` block of size `d × d` of a Choi block.
pub fn choi_block(g: &CMatrix, a: usize, c: usize, d: usize) -> CMatrix {
    g.view((a * d, c * d), (d, d)).into_owned()
}

/// `Σ_{a,c} w_{ac} G[a,c]`: the contribution of one atom to the value at a word.
pub fn contract(word: &CMatrix, g: &CMatrix, d: usize) -> CMatrix {
    let b = word.nrows();
    let mut out = CMatrix::zeros(d, d);
    for a in 0..b {
        for c in 0..b {
            let w = word[(a, c)];
            if w != Complex64::new(0.0, 0.0) {
                out += choi_block(g, a, c, d) * w;
            }
        }
    }
    out
}

/// One rank-one piece `γ: C^d → C^b` of an atom weight.
#[derive(Debug, Clone)]
pub struct Component {
    pub atom: usize,
    pub gamma: CMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    pub dim: usize,
    pub atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn new(dim: usize, atoms: Vec<Atom>) -> Result<Self> {
        let m = Self { dim, atoms };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let arity = self.atoms.first().map(|a| a.site.arity());
        for atom in &self.atoms {
            atom.site.validate()?;
            if Some(atom.site.arity()) != arity {
                return Err(Error::ShapeMismatch("atoms have different numbers of generators".into()));
            }
            let m = atom.site.size() * self.dim;
            if atom.weight.nrows() != m || atom.weight.ncols() != m {
                return Err(Error::ShapeMismatch(format!(
                    "atom weight is {}x{}, expected {m}x{m}",
                    atom.weight.nrows(),
                    atom.weight.ncols()
                )));
            }
        }
        Ok(())
    }

    pub fn arity(&self) -> usize {
        self.atoms.first().map(|a| a.site.arity()).unwrap_or(0)
    }

    /// Value of the measure at the word `index`.
    pub fn moment(&self, index: &[i64], kind: WordKind) -> Result<CMatrix> {
        let mut total = CMatrix::zeros(self.dim, self.dim);
        for atom in &self.atoms {
            total += contract(&atom.site.word(index, kind)?, &atom.weight, self.dim);
        }
        Ok(total)
    }

    /// Total mass `Σ_j Σ_a G_j[a,a]`.
    pub fn unit_sum(&self) -> CMatrix {
        let d = self.dim;
        let mut total = CMatrix::zeros(d, d);
        for atom in &self.atoms {
            for a in 0..atom.site.size() {
                total += choi_block(&atom.weight, a, a, d);
            }
        }
        total
    }

    pub fn normalization_defect(&self) -> f64 {
        frobenius_distance(&self.unit_sum(), &identity(self.dim))
    }

    /// Congruence `G ↦ (I ⊗ S^{-1/2}) G (I ⊗ S^{-1/2})` so the total mass is exactly `I`.
    pub fn normalize(&mut self) -> Result<()> {
        let s = inv_sqrt_pd(&self.unit_sum())?;
        let d = self.dim;
        for atom in &mut self.atoms {
            let b = atom.site.size();
            let mut big = CMatrix::zeros(b * d, b * d);
            for a in 0..b {
                big.view_mut((a * d, a * d), (d, d)).copy_from(&s);
            }
            atom.weight = &big * &atom.weight * &big;
            atom.weight = (&atom.weight + atom.weight.adjoint()).unscale(2.0);
        }
        Ok(())
    }

    /// Smallest weight eigenvalue relative to the largest weight norm (0 if all PSD).
    pub fn min_weight_eigenvalue(&self) -> Result<f64> {
        let mut min = 0.0f64;
        for atom in &self.atoms {
            let eig = herm_eig(&atom.weight)?;
            min = min.min(eig.values.first().copied().unwrap_or(0.0));
        }
        Ok(min)
    }

    fn check_weights(&self, tol: &Tolerances) -> Result<()> {
        let scale = self.atoms.iter().map(|a| frobenius(&a.weight)).fold(0.0, f64::max);
        for atom in &self.atoms {
            let eig = herm_eig(&atom.weight)?;
            let min = eig.values.first().copied().unwrap_or(0.0);
            if min < -tol.psd_tol * scale.max(1.0) {
                return Err(Error::NonPsdWeight { min_eigenvalue: min });
            }
        }
        Ok(())
    }

    /// Rank-one components of every weight, eigenvalues above `rank_tol · λ_max` of the atom.
    ///
    /// Eigenpair `(λ, u)` of `G` gives `γ[a, p] = √λ · conj(u[a·d + p])`, so that
    /// `Σ γ*γ`-type contractions reproduce `G` block by block.
    pub fn components(&self, tol: &Tolerances) -> Result<Vec<Component>> {
        self.check_weights(tol)?;
        let d = self.dim;
        let mut out = Vec::new();
        for (j, atom) in self.atoms.iter().enumerate() {
            let b = atom.site.size();
            let eig = herm_eig(&atom.weight)?;
            let lmax = eig.values.last().copied().unwrap_or(0.0);
            if lmax <= 0.0 {
                continue;
            }
            for k in (0..eig.values.len()).rev() {
                let l = eig.values[k];
                if l <= tol.rank_tol * lmax {
                    break;
                }
                let s = l.sqrt();
                let mut gamma = CMatrix::zeros(b, d);
                for a in 0..b {
                    for p in 0..d {
                        gamma[(a, p)] = eig.vectors[(a * d + p, k)].conj() * s;
                    }
                }
                out.push(Component { atom: j, gamma });
            }
        }
        Ok(out)
    }

    /// Drop atoms whose weight has Frobenius norm below `prune_tol`.
    pub fn prune(&mut self, prune_tol: f64) {
        self.atoms.retain(|a| frobenius(&a.weight) >= prune_tol);
    }
}

/// Choi block `Σ_k vec(γ_k)^* vec(γ_k)` rebuilt from rank-one pieces of size `b × d`.
pub fn choi_from_components<'a>(gammas: impl IntoIterator<Item = &'a CMatrix>, b: usize, d: usize) -> CMatrix {
    let mut g = CMatrix::zeros(b * d, b * d);
    for gamma in gammas {
        // G[(a,p),(c,q)] = conj(γ[a,p]) γ[c,q]
        let v = CMatrix::from_iterator(b * d, 1, (0..b * d).map(|i| gamma[(i / d, i % d)].conj()));
        g += &v * v.adjoint();
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c64, real};

    fn two_point_measure() -> AtomicMeasure {
        let half = identity(2).scale(0.5);
        AtomicMeasure::new(
            2,
            vec![
                Atom { site: Site::point(vec![real(1.0)]), weight: half.clone() },
                Atom { site: Site::point(vec![real(-1.0)]), weight: half },
            ],
        )
        .unwrap()
    }

    #[test]
    fn moments_of_two_points() {
        let m = two_point_measure();
        assert_eq!(m.normalization_defect(), 0.0);
        assert!(frobenius(&m.moment(&[1], WordKind::Unitary).unwrap()) < 1e-15);
        assert!(frobenius_distance(&m.moment(&[2], WordKind::Unitary).unwrap(), &identity(2)) < 1e-15);
    }

    #[test]
    fn components_rebuild_weights() {
        let g = CMatrix::from_fn(4, 4, |i, j| c64((i + j) as f64, i as f64 - j as f64));
        let g = &g * g.adjoint();
        let c = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![real(1.0), real(-1.0)]));
        let x = CMatrix::from_row_slice(2, 2, &[real(0.0), real(1.0), real(1.0), real(0.0)]);
        let m = AtomicMeasure {
            dim: 2,
            atoms: vec![Atom { site: Site::Irrep { images: vec![c, x] }, weight: g.clone() }],
        };
        let comps = m.components(&Tolerances::default()).unwrap();
        let rebuilt = choi_from_components(comps.iter().map(|c| &c.gamma), 2, 2);
        assert!(frobenius_distance(&rebuilt, &g) < 1e-10 * frobenius(&g));
    }

    #[test]
    fn normalize_makes_unit_exact() {
        let mut m = two_point_measure();
        m.atoms[0].weight = identity(2).scale(0.7);
        m.normalize().unwrap();
        assert!(m.normalization_defect() < 1e-14);
    }

    #[test]
    fn json_tags_kinds() {
        let m = two_point_measure();
        let s = crate::json::to_string(&m).unwrap();
        assert!(s.contains("\"kind\": \"point\""), "{s}");
        let back: AtomicMeasure = crate::json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn non_psd_weight_rejected() {
        let mut m = two_point_measure();
        m.atoms[0].weight = identity(2).scale(-0.5);
        assert!(matches!(m.components(&Tolerances::default()), Err(Error::NonPsdWeight { .. })));
    }
}
