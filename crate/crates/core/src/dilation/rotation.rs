//! Irreducible representations of the rational rotation algebra.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::measure::Site;
use crate::error::{Error, Result};
use crate::numerics::CMatrix;

/// `q = exp(2πi a/b)`.
pub fn rotation_q(a: i64, b: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * a as f64 / b as f64)
}

/// Clock `C = diag(1, q, …, q^{b−1})` and backward shift `X e_j = e_{j−1}`, so that `XC = qCX`.
pub fn clock_and_shift(a: i64, b: usize) -> (CMatrix, CMatrix) {
    let q = rotation_q(a, b);
    let clock = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(b, |j, _| q.powu(j as u32)));
    let mut shift = CMatrix::zeros(b, b);
    for j in 0..b {
        shift[((j + b - 1) % b, j)] = Complex64::new(1.0, 0.0);
    }
    (clock, shift)
}

/// Irrep `u₁ ↦ e^{iθ₁}C`, `u₂ ↦ e^{iθ₂}X`.
pub fn clock_shift_irrep(a: i64, b: usize, theta: (f64, f64)) -> Site {
    let (clock, shift) = clock_and_shift(a, b.max(1));
    Site::Irrep {
        images: vec![
            clock * Complex64::from_polar(1.0, theta.0),
            shift * Complex64::from_polar(1.0, theta.1),
        ],
    }
}

/// `m × m` grid of irreps with `θ₁, θ₂ ∈ [0, 2π/b)`; every irrep is unitarily
/// equivalent to one with parameters in that square.
pub fn clock_shift_grid(a: i64, b: usize, m: usize) -> Vec<Site> {
    let step = 2.0 * PI / (b.max(1) * m.max(1)) as f64;
    let mut out = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            out.push(clock_shift_irrep(a, b, (i as f64 * step, j as f64 * step)));
        }
    }
    out
}

/// Write `theta` (in turns) as `a/b` with `b ≤ max_den`, reduced; fail otherwise.
pub fn rational_rotation(theta: f64, max_den: usize) -> Result<(i64, usize)> {
    if !theta.is_finite() {
        return Err(Error::IrrationalRotation(theta));
    }
    for b in 1..=max_den.max(1) {
        let a = (theta * b as f64).round();
        if (a / b as f64 - theta).abs() <= 1e-12 * theta.abs().max(1.0) {
            return Ok((a as i64, b));
        }
    }
    Err(Error::IrrationalRotation(theta))
}

/// Reduce `a/b` by the greatest common divisor.
pub fn reduce_fraction(a: i64, b: usize) -> (i64, usize) {
    fn gcd(x: u64, y: u64) -> u64 {
        if y == 0 { x } else { gcd(y, x % y) }
    }
    let g = gcd(a.unsigned_abs(), b as u64).max(1);
    (a / g as i64, b / g as usize)
}
