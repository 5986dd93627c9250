//! Moment tables and the word conventions used to evaluate them.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::json::cmatrix;
use crate::numerics::{ensure_square, frobenius, frobenius_distance, identity, mat_pow, CMatrix};

/// How negative exponents in an index are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WordKind {
    /// Generators are unitaries; `z^{-1}` is the adjoint and `value(-n) = value(n)*`.
    #[default]
    Unitary,
    /// Generators are invertible normal operators; `z^{-1}` is the inverse.
    Laurent,
}

/// First nonzero entry positive (the zero index counts as positive).
pub fn lex_positive(index: &[i64]) -> bool {
    index.iter().find(|&&x| x != 0).is_none_or(|&x| x > 0)
}

fn negate(index: &[i64]) -> Vec<i64> {
    index.iter().map(|x| -x).collect()
}

/// Evaluate the word attached to `index` on a tuple of square generators.
///
/// For lexicographically positive indices the word is `G_1^{n_1} ⋯ G_ν^{n_ν}`
/// in generator order; for negative indices of [`WordKind::Unitary`] tables it
/// is the adjoint of the word of `-n`, so that the table is self-adjoint even
/// for non-commuting generators.
pub fn eval_word(index: &[i64], gens: &[CMatrix], kind: WordKind) -> Result<CMatrix> {
    if index.len() != gens.len() {
        return Err(Error::ShapeMismatch(format!(
            "index has {} entries but there are {} generators",
            index.len(),
            gens.len()
        )));
    }
    let size = gens.first().map(|g| g.nrows()).unwrap_or(1);
    if kind == WordKind::Unitary && !lex_positive(index) {
        return Ok(eval_word(&negate(index), gens, kind)?.adjoint());
    }
    let mut word = identity(size);
    for (&e, g) in index.iter().zip(gens) {
        if e == 0 {
            continue;
        }
        let base = if e > 0 {
            g.clone()
        } else {
            match kind {
                WordKind::Unitary => g.adjoint(),
                WordKind::Laurent => g
                    .clone()
                    .try_inverse()
                    .ok_or_else(|| Error::Malformed("generator is not invertible".into()))?,
            }
        };
        word *= mat_pow(&base, e.unsigned_abs() as u32);
    }
    Ok(word)
}

/// Prescribed values of a unital map on a finite family of words.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub dim: usize,
    pub nu: usize,
    pub kind: WordKind,
    entries: BTreeMap<Vec<i64>, CMatrix>,
}

impl MomentTable {
    pub fn new(dim: usize, nu: usize, kind: WordKind) -> Self {
        Self { dim, nu, kind, entries: BTreeMap::new() }
    }

    pub fn insert(&mut self, index: Vec<i64>, value: CMatrix) -> Result<()> {
        if index.len() != self.nu {
            return Err(Error::ShapeMismatch(format!("index {index:?} does not have {} entries", self.nu)));
        }
        if value.nrows() != self.dim || value.ncols() != self.dim {
            return Err(Error::ShapeMismatch(format!(
                "moment value is {}x{}, expected {}x{}",
                value.nrows(),
                value.ncols(),
                self.dim,
                self.dim
            )));
        }
        self.entries.insert(index, value);
        Ok(())
    }

    pub fn get(&self, index: &[i64]) -> Option<&CMatrix> {
        self.entries.get(index)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<i64>, &CMatrix)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn zero_index(&self) -> Vec<i64> {
        vec![0; self.nu]
    }

    /// Unit constraint and, for unitary tables, `value(-n) = value(n)*`.
    pub fn validate(&self) -> Result<()> {
        let unit = self
            .get(&self.zero_index())
            .ok_or_else(|| Error::Malformed("moment table has no value at the zero index".into()))?;
        let defect = frobenius_distance(unit, &identity(self.dim));
        if defect > 1e-12 {
            return Err(Error::NotNormalized { defect });
        }
        if self.kind == WordKind::Unitary {
            for (n, v) in &self.entries {
                if let Some(w) = self.get(&negate(n)) {
                    let defect = frobenius_distance(w, &v.adjoint());
                    if defect > 1e-12 * frobenius(v).max(1.0) {
                        return Err(Error::Malformed(format!(
                            "value at {:?} is not the adjoint of the value at {n:?}",
                            negate(n)
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Nonzero indices with one representative per adjoint pair.
    ///
    /// Together with the unit, the real and imaginary parts of these words
    /// span the operator system of the table.
    pub fn canonical_indices(&self) -> Vec<Vec<i64>> {
        self.entries
            .keys()
            .filter(|n| n.iter().any(|&x| x != 0))
            .filter(|n| match self.kind {
                WordKind::Laurent => true,
                WordKind::Unitary => lex_positive(n) || !self.entries.contains_key(&negate(n)),
            })
            .cloned()
            .collect()
    }

    /// Dimension of the operator system spanned by the unit and the words and their adjoints.
    pub fn operator_system_dim(&self) -> usize {
        1 + 2 * self.canonical_indices().len()
    }

    /// Largest entry of `|index|` over the table.
    pub fn order(&self) -> i64 {
        self.entries.keys().flat_map(|n| n.iter().map(|x| x.abs())).max().unwrap_or(0)
    }
}

#[derive(Serialize, Deserialize)]
struct RawEntry {
    index: Vec<i64>,
    #[serde(with = "cmatrix")]
    value: CMatrix,
}

#[derive(Serialize, Deserialize)]
struct RawTable {
    dim: usize,
    nu: usize,
    #[serde(default)]
    kind: WordKind,
    entries: Vec<RawEntry>,
}

impl Serialize for MomentTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawTable {
            dim: self.dim,
            nu: self.nu,
            kind: self.kind,
            entries: self.entries.iter().map(|(k, v)| RawEntry { index: k.clone(), value: v.clone() }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MomentTable {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawTable::deserialize(d)?;
        let mut table = MomentTable::new(raw.dim, raw.nu, raw.kind);
        for e in raw.entries {
            table.insert(e.index, e.value).map_err(serde::de::Error::custom)?;
        }
        Ok(table)
    }
}

/// `L_0 = I`, `L_k = ρ^{-1} T^k`, `L_{-k} = L_k*` for `1 ≤ k ≤ N`.
pub fn circle_moments(t: &CMatrix, rho: f64, order: usize) -> Result<MomentTable> {
    let d = ensure_square(t)?;
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::Malformed(format!("rho must be positive, got {rho}")));
    }
    if order == 0 {
        return Err(Error::Malformed("moment order must be at least 1".into()));
    }
    let mut table = MomentTable::new(d, 1, WordKind::Unitary);
    table.insert(vec![0], identity(d))?;
    let mut power = identity(d);
    for k in 1..=order as i64 {
        power = &power * t;
        let value = power.unscale(rho);
        table.insert(vec![-k], value.adjoint())?;
        table.insert(vec![k], value)?;
    }
    Ok(table)
}

/// Regular moments `T(n) = (T*)^{n⁻} T^{n⁺}` over `n ∈ [-N, N]^ν`.
pub fn regular_moments(ts: &[CMatrix], order: usize) -> Result<MomentTable> {
    let first = ts.first().ok_or_else(|| Error::Malformed("need at least one operator".into()))?;
    let d = ensure_square(first)?;
    for t in ts {
        if ensure_square(t)? != d {
            return Err(Error::ShapeMismatch("operators must have equal size".into()));
        }
    }
    for i in 0..ts.len() {
        for j in i + 1..ts.len() {
            let defect = frobenius_distance(&(&ts[i] * &ts[j]), &(&ts[j] * &ts[i]));
            if defect > 1e-10 * (frobenius(&ts[i]) * frobenius(&ts[j])).max(1.0) {
                return Err(Error::NotCommuting { defect });
            }
        }
    }
    let nu = ts.len();
    let n = order as i64;
    let mut table = MomentTable::new(d, nu, WordKind::Unitary);
    let mut index = vec![-n; nu];
    loop {
        let mut neg = identity(d);
        let mut pos = identity(d);
        for (e, t) in index.iter().zip(ts) {
            if *e < 0 {
                neg *= mat_pow(&t.adjoint(), e.unsigned_abs() as u32);
            } else if *e > 0 {
                pos *= mat_pow(t, *e as u32);
            }
        }
        table.insert(index.clone(), neg * pos)?;
        // odometer over [-N, N]^ν
        let mut k = nu;
        loop {
            if k == 0 {
                return Ok(table);
            }
            k -= 1;
            if index[k] < n {
                index[k] += 1;
                break;
            }
            index[k] = -n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c64, from_row_major, real};

    #[test]
    fn circle_moments_of_zero() {
        let m = circle_moments(&CMatrix::zeros(2, 2), 1.0, 3).unwrap();
        assert_eq!(m.get(&[0]).unwrap(), &identity(2));
        for k in 1..=3 {
            assert_eq!(frobenius(m.get(&[k]).unwrap()), 0.0);
            assert_eq!(frobenius(m.get(&[-k]).unwrap()), 0.0);
        }
        m.validate().unwrap();
    }

    #[test]
    fn circle_moments_berger_scaling() {
        let t = from_row_major(2, 2, &[real(0.0), real(2.0), real(0.0), real(0.0)]);
        let m = circle_moments(&t, 2.0, 2).unwrap();
        let l1 = from_row_major(2, 2, &[real(0.0), real(1.0), real(0.0), real(0.0)]);
        assert_eq!(m.get(&[1]).unwrap(), &l1);
        assert_eq!(frobenius(m.get(&[2]).unwrap()), 0.0);
    }

    #[test]
    fn circle_moments_scalar() {
        let m = circle_moments(&CMatrix::from_element(1, 1, real(0.5)), 1.0, 1).unwrap();
        assert_eq!(m.get(&[1]).unwrap()[(0, 0)], real(0.5));
        assert_eq!(m.operator_system_dim(), 3);
    }

    #[test]
    fn regular_moments_single_variable_matches_circle() {
        let t = from_row_major(2, 2, &[c64(0.2, 0.1), real(0.3), real(0.0), c64(-0.4, 0.0)]);
        let r = regular_moments(std::slice::from_ref(&t), 3).unwrap();
        let c = circle_moments(&t, 1.0, 3).unwrap();
        for (n, v) in c.iter() {
            assert!(frobenius_distance(v, r.get(n).unwrap()) < 1e-15);
        }
    }

    #[test]
    fn regular_moments_mixed_sign() {
        let t1 = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(0.5, 0.1), real(-0.3)]));
        let t2 = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(0.0, 0.7), real(0.2)]));
        let table = regular_moments(&[t1.clone(), t2.clone()], 1).unwrap();
        let expected = t2.adjoint() * &t1;
        assert!(frobenius_distance(table.get(&[1, -1]).unwrap(), &expected) < 1e-15);
        assert_eq!(table.len(), 9);
        table.validate().unwrap();
    }

    #[test]
    fn regular_moments_of_zero_tuple() {
        let z = CMatrix::zeros(2, 2);
        let table = regular_moments(&[z.clone(), z], 2).unwrap();
        for (n, v) in table.iter() {
            if n.iter().any(|&x| x != 0) {
                assert_eq!(frobenius(v), 0.0);
            }
        }
    }

    #[test]
    fn regular_moments_reject_noncommuting() {
        let a = from_row_major(2, 2, &[real(0.0), real(1.0), real(0.0), real(0.0)]);
        let b = a.adjoint();
        assert!(matches!(regular_moments(&[a, b], 1), Err(Error::NotCommuting { .. })));
    }

    #[test]
    fn word_conventions() {
        let u = from_row_major(2, 2, &[real(0.0), real(1.0), real(1.0), real(0.0)]);
        let c = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![real(1.0), real(-1.0)]));
        let gens = [c.clone(), u.clone()];
        let w = eval_word(&[1, 1], &gens, WordKind::Unitary).unwrap();
        assert_eq!(w, &c * &u);
        let w_neg = eval_word(&[-1, -1], &gens, WordKind::Unitary).unwrap();
        assert_eq!(w_neg, (&c * &u).adjoint());
        let half = CMatrix::from_element(1, 1, real(0.5));
        let inv = eval_word(&[-2], std::slice::from_ref(&half), WordKind::Laurent).unwrap();
        assert!((inv[(0, 0)] - real(4.0)).norm() < 1e-15);
    }

    #[test]
    fn json_roundtrip() {
        let m = circle_moments(&CMatrix::from_element(1, 1, c64(0.25, -0.5)), 1.0, 2).unwrap();
        let s = crate::json::to_string(&m).unwrap();
        let back: MomentTable = crate::json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
