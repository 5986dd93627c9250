use nalgebra::SVD;

use super::moments::{MomentTable, WordKind};
use super::{Declaration, Dilation, GeneratorClass, Provenance};
use crate::error::{Error, Result};
use crate::numerics::{complete_isometry_to_unitary, frobenius, herm_eig, numerical_rank_factor, CMatrix, Tolerances};

/// Polar factor of a tall matrix with full column rank.
fn orthonormal_factor(x: &CMatrix) -> Result<CMatrix> {
    let svd = SVD::new(x.clone(), true, true);
    match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => Ok(u * vt),
        _ => Err(Error::Malformed("singular value decomposition failed".into())),
    }
}

/// Highest order `N` such that the table holds `L_k` for all `|k| ≤ N` (one variable).
fn contiguous_order(m: &MomentTable) -> Result<usize> {
    if m.nu != 1 || m.kind != WordKind::Unitary {
        return Err(Error::Malformed("Toeplitz construction needs a one-variable unitary table".into()));
    }
    let mut n = 0usize;
    while m.get(&[n as i64 + 1]).is_some() || m.get(&[-(n as i64) - 1]).is_some() {
        n += 1;
    }
    if n == 0 {
        return Err(Error::Malformed("moment table has no nonzero index".into()));
    }
    Ok(n)
}

fn moment(m: &MomentTable, k: i64) -> CMatrix {
    match m.get(&[k]) {
        Some(v) => v.clone(),
        None => m.get(&[-k]).map(|v| v.adjoint()).unwrap_or_else(|| CMatrix::zeros(m.dim, m.dim)),
    }
}

/// Block Toeplitz matrix `[L_{j−i}]_{i,j=0..N}` of a one-variable table.
pub fn block_toeplitz(m: &MomentTable) -> Result<CMatrix> {
    m.validate()?;
    let n = contiguous_order(m)?;
    let d = m.dim;
    let mut big = CMatrix::zeros((n + 1) * d, (n + 1) * d);
    for i in 0..=n {
        for j in 0..=n {
            let block = moment(m, j as i64 - i as i64);
            big.view_mut((i * d, j * d), (d, d)).copy_from(&block);
        }
    }
    Ok(big)
}

/// Unitary `U` and isometry `V` with `V*U^kV = L_k` for `|k| ≤ N`.
///
/// `M = W*W` is read as the Gram matrix of `U^i V`, `i = 0..N`. The shift
/// `W_i ↦ W_{i+1}` on the first `N` block columns is isometric when `M` is
/// block Toeplitz; it is obtained as the polar factor of `B A*` and then
/// extended to a unitary. Fails with `NotIsometric` when `W*(U₀A − B)`
/// exceeds `1e-8 λmax(M)`.
pub fn toeplitz_gns_unitary(m: &MomentTable, tol: &Tolerances) -> Result<Dilation> {
    let big = block_toeplitz(m)?;
    let n = contiguous_order(m)?;
    let d = m.dim;
    let factor = numerical_rank_factor(&big, tol)?;
    let w = factor.w;
    let r = factor.rank;
    let scale = herm_eig(&big)?.values.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);

    let a = w.columns(0, n * d).into_owned();
    let b = w.columns(d, n * d).into_owned();
    // A = Y Λ^{1/2} Q*; the domain basis Y and range basis B Q Λ^{-1/2}
    // come from the Hermitian eigensolver, which stays accurate where the
    // SVD of the square cross matrix B A* did not.
    let gram = herm_eig(&(a.adjoint() * &a))?;
    let kept: Vec<usize> = (0..gram.values.len()).filter(|&i| gram.values[i] > 1e-14 * scale).collect();
    let s = kept.len();
    let mut q = CMatrix::zeros(n * d, s);
    for (col, &i) in kept.iter().enumerate() {
        q.set_column(col, &gram.vectors.column(i).unscale(gram.values[i].sqrt()));
    }
    let domain = orthonormal_factor(&(&a * &q))?;
    let range = orthonormal_factor(&(&b * &q))?;
    let u0 = &range * domain.adjoint();
    // Measured against the Gram matrix: near-null directions of M carry
    // roundoff of size sqrt(eps) in W that never reaches the moments.
    let shift_residual = frobenius(&(w.adjoint() * (&u0 * &a - &b)));
    if shift_residual > 1e-8 * scale {
        return Err(Error::NotIsometric { defect: shift_residual / scale });
    }
    let u = complete_isometry_to_unitary(&u0, &domain, &range)?;
    let v = w.columns(0, d).into_owned();
    Ok(Dilation {
        v,
        generators: vec![u],
        k: r,
        provenance: Provenance::Gns,
        declaration: Declaration::commuting(1, GeneratorClass::Unitary),
        residuals: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dilation::moments::circle_moments;
    use crate::numerics::{frobenius_distance, from_row_major, identity, mat_pow, real, unitarity_defect};

    fn moment_residual(dil: &Dilation, t: &CMatrix, rho: f64, n: u32) -> f64 {
        let u = &dil.generators[0];
        (0..=n)
            .map(|k| {
                let lhs = dil.v.adjoint() * mat_pow(u, k) * &dil.v;
                let rhs = if k == 0 { identity(t.nrows()) } else { mat_pow(t, k).unscale(rho) };
                frobenius_distance(&lhs, &rhs)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn identity_moments_give_rank_one() {
        let t = CMatrix::from_element(1, 1, real(1.0));
        let dil = toeplitz_gns_unitary(&circle_moments(&t, 1.0, 2).unwrap(), &Tolerances::default()).unwrap();
        assert_eq!(dil.k, 1);
        assert!((dil.generators[0][(0, 0)] - real(1.0)).norm() < 1e-12);
        assert!((dil.v[(0, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn half_scalar_matches_explicit_completion() {
        let t = CMatrix::from_element(1, 1, real(0.5));
        let dil = toeplitz_gns_unitary(&circle_moments(&t, 1.0, 1).unwrap(), &Tolerances::default()).unwrap();
        assert_eq!(dil.k, 2);
        let u = &dil.generators[0];
        assert!(unitarity_defect(u) < 1e-12);
        let vuv = dil.v.adjoint() * u * &dil.v;
        assert!((vuv[(0, 0)] - real(0.5)).norm() < 1e-12);
        // the explicit completion has the same compression onto e_0
        let s = 0.75f64.sqrt();
        let explicit = from_row_major(2, 2, &[real(0.5), real(s), real(s), real(-0.5)]);
        assert!(unitarity_defect(&explicit) < 1e-15);
        assert!((explicit[(0, 0)] - vuv[(0, 0)]).norm() < 1e-12);
    }

    #[test]
    fn berger_nilpotent() {
        let t = from_row_major(2, 2, &[real(0.0), real(2.0), real(0.0), real(0.0)]);
        let dil = toeplitz_gns_unitary(&circle_moments(&t, 2.0, 3).unwrap(), &Tolerances::default()).unwrap();
        assert!(dil.k <= 8);
        assert!(unitarity_defect(&dil.generators[0]) < 1e-10);
        assert!(moment_residual(&dil, &t, 2.0, 3) < 1e-8);
    }

    #[test]
    fn psd_gate_rejects_large_norm() {
        let t = CMatrix::from_element(1, 1, real(1.2));
        let res = toeplitz_gns_unitary(&circle_moments(&t, 1.0, 1).unwrap(), &Tolerances::default());
        assert!(matches!(res, Err(Error::NotPsd { .. })));
    }

    #[test]
    fn random_contractions() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for d in 1..=4 {
            for n in [1usize, 3, 6] {
                let g = CMatrix::from_fn(d, d, |_, _| crate::numerics::c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
                let norm = nalgebra::SVD::new(g.clone(), false, false).singular_values[0];
                let t = g.unscale(norm);
                let dil = toeplitz_gns_unitary(&circle_moments(&t, 1.0, n).unwrap(), &Tolerances::default()).unwrap();
                assert!(dil.k <= (n + 1) * d);
                assert!(unitarity_defect(&dil.generators[0]) < 1e-10);
                assert!(moment_residual(&dil, &t, 1.0, n as u32) < 1e-8, "d={d} n={n}");
            }
        }
    }
}
