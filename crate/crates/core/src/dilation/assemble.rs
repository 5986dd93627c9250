use super::measure::AtomicMeasure;
use super::{Declaration, Dilation, Provenance};
use crate::error::{Error, Result};
use crate::numerics::{CMatrix, Tolerances};

/// Naimark dilation of an atomic measure.
///
/// Every rank-one component `γ: C^d → C^b` of an atom contributes a direct
/// summand carrying the atom's generator images; `V` stacks the `γ`s.
pub fn assemble_atomic_dilation(
    mu: &AtomicMeasure,
    declaration: Declaration,
    tol: &Tolerances,
) -> Result<Dilation> {
    mu.validate()?;
    let defect = mu.normalization_defect();
    if defect > 1e-8 {
        return Err(Error::NotNormalized { defect });
    }
    let comps = mu.components(tol)?;
    let d = mu.dim;
    let nu = mu.arity();
    let k: usize = comps.iter().map(|c| c.gamma.nrows()).sum();
    let mut v = CMatrix::zeros(k, d);
    let mut generators = vec![CMatrix::zeros(k, k); nu];
    let mut offset = 0;
    for comp in &comps {
        let images = mu.atoms[comp.atom].site.images();
        let b = comp.gamma.nrows();
        v.view_mut((offset, 0), (b, d)).copy_from(&comp.gamma);
        for (g, img) in generators.iter_mut().zip(&images) {
            g.view_mut((offset, offset), (b, b)).copy_from(img);
        }
        offset += b;
    }
    Ok(Dilation { v, generators, k, provenance: Provenance::Naimark, declaration, residuals: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dilation::measure::{Atom, Site};
    use crate::dilation::moments::WordKind;
    use crate::dilation::rotation::clock_shift_irrep;
    use crate::dilation::GeneratorClass;
    use crate::numerics::{c64, frobenius, frobenius_distance, identity, isometry_defect, real};

    #[test]
    fn single_atom_at_one() {
        let mu = AtomicMeasure::new(3, vec![Atom { site: Site::point(vec![real(1.0)]), weight: identity(3) }]).unwrap();
        let dil = assemble_atomic_dilation(&mu, Declaration::commuting(1, GeneratorClass::Unitary), &Tolerances::default())
            .unwrap();
        assert_eq!(dil.k, 3);
        assert!(frobenius_distance(&dil.generators[0], &identity(3)) < 1e-15);
        assert!(isometry_defect(&dil.v) < 1e-14);
    }

    #[test]
    fn two_atoms_plus_minus_one() {
        let half = identity(2).scale(0.5);
        let mu = AtomicMeasure::new(
            2,
            vec![
                Atom { site: Site::point(vec![real(1.0)]), weight: half.clone() },
                Atom { site: Site::point(vec![real(-1.0)]), weight: half },
            ],
        )
        .unwrap();
        let dil = assemble_atomic_dilation(&mu, Declaration::commuting(1, GeneratorClass::Unitary), &Tolerances::default())
            .unwrap();
        assert_eq!(dil.k, 4);
        assert!(frobenius(&dil.compressed_word(&[1], WordKind::Unitary).unwrap()) < 1e-12);
        let second = dil.compressed_word(&[2], WordKind::Unitary).unwrap();
        assert!(frobenius_distance(&second, &identity(2)) < 1e-12);
    }

    #[test]
    fn irrep_atoms_keep_relation() {
        let q = c64(-1.0, 0.0);
        let mut atoms = Vec::new();
        for (t1, t2) in [(0.0, 0.0), (0.3, 1.1)] {
            let site = clock_shift_irrep(1, 2, (t1, t2));
            let v = CMatrix::from_fn(4, 1, |i, _| c64(1.0 + i as f64, 0.5 * i as f64));
            let g = &v * v.adjoint();
            atoms.push(Atom { site, weight: g });
        }
        let mut mu = AtomicMeasure::new(2, atoms).unwrap();
        mu.normalize().unwrap();
        let dil = assemble_atomic_dilation(&mu, Declaration::q_commuting(q), &Tolerances::default()).unwrap();
        let (u1, u2) = (&dil.generators[0], &dil.generators[1]);
        assert!(frobenius_distance(&(u2 * u1), &(u1 * u2 * q)) < 1e-12);
        assert!(isometry_defect(&dil.v) < 1e-12);
        let direct = mu.moment(&[1, 1], WordKind::Unitary).unwrap();
        assert!(frobenius_distance(&dil.compressed_word(&[1, 1], WordKind::Unitary).unwrap(), &direct) < 1e-12);
    }

    #[test]
    fn unnormalized_rejected() {
        let mu = AtomicMeasure::new(1, vec![Atom { site: Site::point(vec![real(1.0)]), weight: identity(1).scale(0.5) }])
            .unwrap();
        let res = assemble_atomic_dilation(&mu, Declaration::commuting(1, GeneratorClass::Unitary), &Tolerances::default());
        assert!(matches!(res, Err(Error::NotNormalized { .. })));
    }
}
