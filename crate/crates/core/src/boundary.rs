//! Numerical ranges, the boundary density `Re((2πi)^{-1}(ζ − T)^{-1} dζ)`,
//! Cauchy transforms and their trapezoidal discretization.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dilation::measure::{Atom, AtomicMeasure, Site};
use crate::error::{Error, Result};
use crate::numerics::{
    ensure_square, frobenius, frobenius_distance, herm_eig, hermitian_part, identity, psd_project, CMatrix,
};

/// Angles used by [`contains_numerical_range`].
pub const CONTAINMENT_ANGLES: usize = 720;

/// One node of a parametrized curve: `ζ(θ)`, `ζ'(θ)` and its trapezoid weight in `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSample {
    pub theta: f64,
    pub z: Complex64,
    pub dz: Complex64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCurve {
    Disc { radius: f64 },
    /// `ζ(θ) = a cos θ + i b sin θ`.
    Ellipse { a: f64, b: f64 },
    /// Boundary of `{r < |z| < 1}`: outer circle counterclockwise, inner circle clockwise.
    Annulus { r: f64 },
    /// Explicit samples on a uniform `θ` grid.
    Sampled { samples: Vec<CurveSample> },
}

impl BoundaryCurve {
    pub fn unit_disc() -> Self {
        BoundaryCurve::Disc { radius: 1.0 }
    }

    pub fn sampled(points: Vec<(f64, Complex64, Complex64)>) -> Result<Self> {
        let n = points.len();
        if n < 3 {
            return Err(Error::Malformed("a sampled curve needs at least 3 samples".into()));
        }
        let samples: Vec<CurveSample> = points
            .into_iter()
            .map(|(theta, z, dz)| CurveSample { theta, z, dz, weight: 2.0 * PI / n as f64 })
            .collect();
        let curve = BoundaryCurve::Sampled { samples };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BoundaryCurve::Disc { radius } if !(radius.is_finite() && *radius > 0.0) => {
                Err(Error::Malformed("disc radius must be positive".into()))
            }
            BoundaryCurve::Ellipse { a, b } if !(a.is_finite() && b.is_finite() && *a > 0.0 && *b > 0.0) => {
                Err(Error::Malformed("ellipse semi-axes must be positive".into()))
            }
            BoundaryCurve::Annulus { r } if !(r.is_finite() && *r > 0.0 && *r < 1.0) => {
                Err(Error::Malformed("annulus radius must lie in (0, 1)".into()))
            }
            BoundaryCurve::Sampled { samples } => {
                if samples.iter().any(|s| s.dz.norm() == 0.0 || !s.z.re.is_finite() || !s.z.im.is_finite()) {
                    return Err(Error::Malformed("sampled curve has a vanishing or non-finite derivative".into()));
                }
                let n = samples.len();
                let gaps: Vec<f64> = (0..n).map(|i| (samples[(i + 1) % n].z - samples[i].z).norm()).collect();
                let typical = gaps[..n - 1].iter().cloned().fold(0.0, f64::max);
                if gaps[n - 1] > 3.0 * typical.max(f64::MIN_POSITIVE) {
                    return Err(Error::Malformed("sampled curve is not closed".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn is_convex(&self) -> bool {
        match self {
            BoundaryCurve::Disc { .. } | BoundaryCurve::Ellipse { .. } => true,
            BoundaryCurve::Annulus { .. } => false,
            BoundaryCurve::Sampled { samples } => polygon_is_convex(&samples.iter().map(|s| s.z).collect::<Vec<_>>(), 1e-9),
        }
    }

    /// Trapezoid nodes; sampled curves return their own samples.
    pub fn samples(&self, nodes: usize) -> Vec<CurveSample> {
        let w = 2.0 * PI / nodes as f64;
        let angle = |j: usize| 2.0 * PI * j as f64 / nodes as f64;
        match self {
            BoundaryCurve::Disc { radius } => (0..nodes)
                .map(|j| {
                    let e = Complex64::from_polar(1.0, angle(j));
                    CurveSample { theta: angle(j), z: e * radius, dz: Complex64::i() * e * radius, weight: w }
                })
                .collect(),
            BoundaryCurve::Ellipse { a, b } => (0..nodes)
                .map(|j| {
                    let t = angle(j);
                    CurveSample {
                        theta: t,
                        z: Complex64::new(a * t.cos(), b * t.sin()),
                        dz: Complex64::new(-a * t.sin(), b * t.cos()),
                        weight: w,
                    }
                })
                .collect(),
            BoundaryCurve::Annulus { r } => {
                let mut out: Vec<CurveSample> = BoundaryCurve::unit_disc().samples(nodes);
                out.extend((0..nodes).map(|j| {
                    let e = Complex64::from_polar(1.0, -angle(j));
                    CurveSample { theta: angle(j), z: e * *r, dz: -Complex64::i() * e * *r, weight: w }
                }));
                out
            }
            BoundaryCurve::Sampled { samples } => samples.clone(),
        }
    }

    /// Node at parameter `θ` (outer circle for the annulus; an existing sample for sampled curves).
    pub fn sample_at(&self, theta: f64) -> Result<CurveSample> {
        match self {
            BoundaryCurve::Disc { radius } => {
                let e = Complex64::from_polar(1.0, theta);
                Ok(CurveSample { theta, z: e * radius, dz: Complex64::i() * e * radius, weight: 0.0 })
            }
            BoundaryCurve::Ellipse { a, b } => Ok(CurveSample {
                theta,
                z: Complex64::new(a * theta.cos(), b * theta.sin()),
                dz: Complex64::new(-a * theta.sin(), b * theta.cos()),
                weight: 0.0,
            }),
            BoundaryCurve::Annulus { .. } => BoundaryCurve::unit_disc().sample_at(theta),
            BoundaryCurve::Sampled { samples } => samples
                .iter()
                .find(|s| (s.theta - theta).abs() <= 1e-9)
                .copied()
                .ok_or_else(|| Error::Malformed(format!("no sample at theta = {theta}"))),
        }
    }

    /// `h_Ω(θ) = max_{ζ ∈ Ω} Re(e^{−iθ} ζ)`.
    pub fn support(&self, theta: f64) -> f64 {
        match self {
            BoundaryCurve::Disc { radius } => *radius,
            BoundaryCurve::Ellipse { a, b } => (a * a * theta.cos().powi(2) + b * b * theta.sin().powi(2)).sqrt(),
            BoundaryCurve::Annulus { .. } => 1.0,
            BoundaryCurve::Sampled { samples } => {
                let e = Complex64::from_polar(1.0, -theta);
                samples.iter().map(|s| (e * s.z).re).fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            BoundaryCurve::Disc { radius } => 2.0 * radius,
            BoundaryCurve::Ellipse { a, b } => 2.0 * a.max(*b),
            BoundaryCurve::Annulus { .. } => 2.0,
            BoundaryCurve::Sampled { samples } => {
                let mut best = 0.0f64;
                for s in samples {
                    for t in samples {
                        best = best.max((s.z - t.z).norm());
                    }
                }
                best
            }
        }
    }

    /// Parse `disc`, `ellipse:a,b` or `annulus:r`.
    pub fn parse_spec(spec: &str) -> Result<Self> {
        let (kind, args) = spec.split_once(':').unwrap_or((spec, ""));
        let nums: Vec<f64> = if args.is_empty() {
            vec![]
        } else {
            args.split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|_| Error::Malformed(format!("bad curve parameter '{x}'"))))
                .collect::<Result<_>>()?
        };
        let curve = match (kind, nums.as_slice()) {
            ("disc", []) => BoundaryCurve::unit_disc(),
            ("disc", [r]) => BoundaryCurve::Disc { radius: *r },
            ("ellipse", [a, b]) => BoundaryCurve::Ellipse { a: *a, b: *b },
            ("annulus", [r]) => BoundaryCurve::Annulus { r: *r },
            _ => return Err(Error::Malformed(format!("unknown curve spec '{spec}'"))),
        };
        curve.validate()?;
        Ok(curve)
    }
}

fn polygon_is_convex(points: &[Complex64], slack: f64) -> bool {
    let n = points.len();
    if n < 3 {
        return true;
    }
    let scale = points.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let mut sign = 0.0f64;
    for i in 0..n {
        let e1 = points[(i + 1) % n] - points[i];
        let e2 = points[(i + 2) % n] - points[(i + 1) % n];
        let cross = e1.re * e2.im - e1.im * e2.re;
        if cross.abs() <= slack * scale * scale {
            continue;
        }
        if sign == 0.0 {
            sign = cross.signum();
        } else if cross.signum() != sign {
            return false;
        }
    }
    true
}

/// `(theta, z, dz)` with complex numbers as `[re, im]`.
type RawSample = (f64, [f64; 2], [f64; 2]);

#[derive(Serialize, Deserialize)]
struct RawCurve {
    kind: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    samples: Option<Vec<RawSample>>,
}

impl Serialize for BoundaryCurve {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut params = BTreeMap::new();
        let (kind, samples) = match self {
            BoundaryCurve::Disc { radius } => {
                params.insert("radius".to_string(), *radius);
                ("disc", None)
            }
            BoundaryCurve::Ellipse { a, b } => {
                params.insert("a".to_string(), *a);
                params.insert("b".to_string(), *b);
                ("ellipse", None)
            }
            BoundaryCurve::Annulus { r } => {
                params.insert("r".to_string(), *r);
                ("annulus", None)
            }
            BoundaryCurve::Sampled { samples } => (
                "sampled",
                Some(samples.iter().map(|c| (c.theta, [c.z.re, c.z.im], [c.dz.re, c.dz.im])).collect()),
            ),
        };
        RawCurve { kind: kind.to_string(), params, samples }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BoundaryCurve {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RawCurve::deserialize(d)?;
        let param = |name: &str| raw.params.get(name).copied().ok_or_else(|| D::Error::custom(format!("missing parameter '{name}'")));
        let curve = match raw.kind.as_str() {
            "disc" => BoundaryCurve::Disc { radius: raw.params.get("radius").copied().unwrap_or(1.0) },
            "ellipse" => BoundaryCurve::Ellipse { a: param("a")?, b: param("b")? },
            "annulus" => BoundaryCurve::Annulus { r: param("r")? },
            "sampled" => {
                let samples = raw.samples.ok_or_else(|| D::Error::custom("sampled curve needs 'samples'"))?;
                let points = samples
                    .into_iter()
                    .map(|(t, z, dz)| (t, Complex64::new(z[0], z[1]), Complex64::new(dz[0], dz[1])))
                    .collect();
                return BoundaryCurve::sampled(points).map_err(D::Error::custom);
            }
            other => return Err(D::Error::custom(format!("unknown curve kind '{other}'"))),
        };
        curve.validate().map_err(D::Error::custom)?;
        Ok(curve)
    }
}

/// Support function sweep of `W(T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeReport {
    pub thetas: Vec<f64>,
    /// `h(θ) = λ_max(Re(e^{−iθ} T))`.
    pub support: Vec<f64>,
    #[serde(with = "crate::json::complex_vec")]
    pub boundary: Vec<Complex64>,
    /// Largest `h` over the sweep.
    pub radius: f64,
}

impl RangeReport {
    /// `theta,h,re,im` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,h,re,im\n");
        for ((t, h), z) in self.thetas.iter().zip(&self.support).zip(&self.boundary) {
            let _ = writeln!(out, "{t:.16e},{h:.16e},{:.16e},{:.16e}", z.re, z.im);
        }
        out
    }
}

fn rotated_real_part(t: &CMatrix, theta: f64) -> CMatrix {
    hermitian_part(&(t * Complex64::from_polar(1.0, -theta)))
}

/// `h(θ)` and the contact point `⟨Tξ, ξ⟩` for the top eigenvector `ξ`.
fn support_point(t: &CMatrix, theta: f64) -> Result<(f64, Complex64)> {
    let eig = herm_eig(&rotated_real_part(t, theta))?;
    let n = eig.values.len();
    let xi = eig.vectors.column(n - 1);
    let z = (xi.adjoint() * t * xi)[(0, 0)];
    Ok((eig.values[n - 1], z))
}

fn support_value(t: &CMatrix, theta: f64) -> Result<f64> {
    Ok(herm_eig(&rotated_real_part(t, theta))?.values.last().copied().unwrap_or(0.0))
}

pub fn numerical_range(t: &CMatrix, angles: usize) -> Result<RangeReport> {
    ensure_square(t)?;
    if angles < 8 {
        return Err(Error::Malformed("numerical range needs at least 8 angles".into()));
    }
    let thetas: Vec<f64> = (0..angles).map(|j| 2.0 * PI * j as f64 / angles as f64).collect();
    let points: Vec<(f64, Complex64)> = thetas.par_iter().map(|&th| support_point(t, th)).collect::<Result<_>>()?;
    let support: Vec<f64> = points.iter().map(|p| p.0).collect();
    let radius = support.iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(0.0);
    Ok(RangeReport { thetas, support, boundary: points.into_iter().map(|p| p.1).collect(), radius })
}

/// `w(T) = max_θ h(θ)`: a 720-angle sweep refined by golden-section search.
pub fn numerical_radius(t: &CMatrix) -> Result<f64> {
    let report = numerical_range(t, CONTAINMENT_ANGLES)?;
    let step = 2.0 * PI / CONTAINMENT_ANGLES as f64;
    let (best_idx, mut best) = report
        .support
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &h)| if h > acc.1 { (i, h) } else { acc });
    let center = report.thetas[best_idx];
    let (mut lo, mut hi) = (center - step, center + step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = support_value(t, x1)?;
    let mut f2 = support_value(t, x2)?;
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = support_value(t, x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = support_value(t, x1)?;
        }
        best = best.max(f1).max(f2);
    }
    Ok(best.max(0.0))
}

/// `h_T(θ) ≤ h_Ω(θ) − margin` on every sweep angle.
pub fn contains_numerical_range(t: &CMatrix, curve: &BoundaryCurve, margin: f64) -> Result<bool> {
    if !curve.is_convex() {
        return Err(Error::NonConvexCurve);
    }
    let report = numerical_range(t, CONTAINMENT_ANGLES)?;
    Ok(report.thetas.iter().zip(&report.support).all(|(&th, &h)| h <= curve.support(th) - margin))
}

/// Default containment margin: 2% of the curve diameter.
pub fn default_margin(curve: &BoundaryCurve) -> f64 {
    0.02 * curve.diameter()
}

fn resolvent(t: &CMatrix, z: Complex64) -> Result<CMatrix> {
    let d = t.nrows();
    let a = identity(d) * z - t;
    let inv = a.clone().try_inverse().ok_or(Error::ResolventSingular { point: z })?;
    let cond = frobenius(&a) * frobenius(&inv);
    if !cond.is_finite() || cond > 1e12 {
        return Err(Error::ResolventSingular { point: z });
    }
    Ok(inv)
}

/// `Re[(2πi)^{-1} ζ'(θ) (ζ(θ) − T)^{-1}]` at one node.
pub fn density_at(t: &CMatrix, s: &CurveSample) -> Result<CMatrix> {
    let r = resolvent(t, s.z)?;
    Ok(hermitian_part(&(r * (s.dz / Complex64::new(0.0, 2.0 * PI)))))
}

pub fn mu_density(t: &CMatrix, curve: &BoundaryCurve, theta: f64) -> Result<CMatrix> {
    ensure_square(t)?;
    density_at(t, &curve.sample_at(theta)?)
}

#[derive(Debug, Clone)]
pub struct Quadrature {
    pub measure: AtomicMeasure,
    /// `‖Σ w_j D_j⁺ − I‖_F` before the final renormalization.
    pub pre_defect: f64,
    /// `Σ w_j ‖D_j − D_j⁺‖_F` removed by the PSD projection.
    pub clipped_mass: f64,
}

/// Trapezoidal discretization of the boundary density into point atoms.
pub fn quadrature_measure(t: &CMatrix, curve: &BoundaryCurve, nodes: usize) -> Result<Quadrature> {
    let d = ensure_square(t)?;
    if nodes < 3 {
        return Err(Error::Malformed("quadrature needs at least 3 nodes".into()));
    }
    if !contains_numerical_range(t, curve, default_margin(curve))? {
        return Err(Error::NotContained);
    }
    let samples = curve.samples(nodes);
    let densities: Vec<CMatrix> = samples.par_iter().map(|s| density_at(t, s)).collect::<Result<_>>()?;
    let mut atoms = Vec::with_capacity(samples.len());
    let mut clipped_mass = 0.0;
    for (s, dens) in samples.iter().zip(&densities) {
        let clipped = psd_project(dens)?;
        clipped_mass += s.weight * frobenius_distance(dens, &clipped);
        atoms.push(Atom { site: Site::point(vec![s.z]), weight: clipped * Complex64::new(s.weight, 0.0) });
    }
    let mut measure = AtomicMeasure::new(d, atoms)?;
    let pre_defect = measure.normalization_defect();
    measure.normalize()?;
    Ok(Quadrature { measure, pre_defect, clipped_mass })
}

/// `(2πi)^{-1} Σ_j w_j conj(f_j) ζ'_j / (ζ_j − z)`.
pub fn cauchy_transform_scalar(f: &[Complex64], samples: &[CurveSample], z: Complex64) -> Result<Complex64> {
    check_lengths(f, samples)?;
    let mut total = Complex64::new(0.0, 0.0);
    for (fj, s) in f.iter().zip(samples) {
        let gap = s.z - z;
        if gap.norm() == 0.0 {
            return Err(Error::ResolventSingular { point: z });
        }
        total += fj.conj() * s.dz * s.weight / gap;
    }
    Ok(total / Complex64::new(0.0, 2.0 * PI))
}

/// Matrix version through the resolvent: `(2πi)^{-1} Σ_j w_j conj(f_j) ζ'_j (ζ_j − T)^{-1}`.
pub fn cauchy_transform_matrix(f: &[Complex64], samples: &[CurveSample], t: &CMatrix) -> Result<CMatrix> {
    let d = ensure_square(t)?;
    check_lengths(f, samples)?;
    let mut total = CMatrix::zeros(d, d);
    for (fj, s) in f.iter().zip(samples) {
        total += resolvent(t, s.z)? * (fj.conj() * s.dz * s.weight);
    }
    Ok(total / Complex64::new(0.0, 2.0 * PI))
}

fn check_lengths(f: &[Complex64], samples: &[CurveSample]) -> Result<()> {
    if f.len() != samples.len() {
        return Err(Error::ShapeMismatch(format!("{} function values for {} samples", f.len(), samples.len())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c64, from_row_major, real};

    fn nilpotent(c: f64) -> CMatrix {
        from_row_major(2, 2, &[real(0.0), real(c), real(0.0), real(0.0)])
    }

    #[test]
    fn range_of_zero() {
        let r = numerical_range(&CMatrix::zeros(2, 2), 16).unwrap();
        assert!(r.boundary.iter().all(|z| z.norm() < 1e-15));
        assert_eq!(r.radius, 0.0);
    }

    #[test]
    fn range_of_hermitian_diagonal() {
        let t = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![real(1.0), real(-1.0)]));
        let r = numerical_range(&t, 64).unwrap();
        for (th, h) in r.thetas.iter().zip(&r.support) {
            assert!((h - th.cos().abs()).abs() < 1e-12);
        }
        assert!((numerical_radius(&t).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn range_of_nilpotent_is_disc() {
        let r = numerical_range(&nilpotent(2.0), 64).unwrap();
        assert!(r.support.iter().all(|h| (h - 1.0).abs() < 1e-12));
        assert!((r.radius - 1.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_points_touch_support_lines() {
        let t = from_row_major(2, 2, &[c64(0.3, 0.1), real(0.7), c64(0.0, 0.2), c64(-0.2, 0.4)]);
        let r = numerical_range(&t, 128).unwrap();
        for ((th, h), z) in r.thetas.iter().zip(&r.support).zip(&r.boundary) {
            let proj = (Complex64::from_polar(1.0, -th) * z).re;
            assert!((proj - h).abs() < 1e-10);
        }
        assert!(polygon_is_convex(&r.boundary, 1e-9));
    }

    #[test]
    fn containment_examples() {
        let disc = BoundaryCurve::unit_disc();
        assert!(contains_numerical_range(&CMatrix::zeros(2, 2), &disc, 0.0).unwrap());
        assert!(!contains_numerical_range(&identity(2).scale(2.0), &disc, 0.0).unwrap());
        let t = nilpotent(1.8); // w = 0.9
        assert!(contains_numerical_range(&t, &disc, 0.05).unwrap());
        assert!(!contains_numerical_range(&t, &disc, 0.15).unwrap());
        let ann = BoundaryCurve::Annulus { r: 0.5 };
        assert_eq!(contains_numerical_range(&t, &ann, 0.0), Err(Error::NonConvexCurve));
    }

    #[test]
    fn density_of_zero_is_constant() {
        for th in [0.0, 1.0, 4.0] {
            let dens = mu_density(&CMatrix::zeros(1, 1), &BoundaryCurve::unit_disc(), th).unwrap();
            assert!((dens[(0, 0)] - real(1.0 / (2.0 * PI))).norm() < 1e-15);
        }
    }

    #[test]
    fn density_integrates_to_identity() {
        let t = nilpotent(1.0);
        let q = quadrature_measure(&t, &BoundaryCurve::unit_disc(), 256).unwrap();
        assert!(q.pre_defect <= 1e-6);
        assert!(q.measure.normalization_defect() < 1e-14);
    }

    #[test]
    fn density_is_positive_inside() {
        let t = nilpotent(1.0);
        let disc = BoundaryCurve::unit_disc();
        for j in 0..512 {
            let th = 2.0 * PI * j as f64 / 512.0;
            let min = herm_eig(&mu_density(&t, &disc, th).unwrap()).unwrap().values[0];
            assert!(min >= -1e-12);
        }
    }

    #[test]
    fn four_node_scalar_quadrature() {
        let q = quadrature_measure(&CMatrix::zeros(1, 1), &BoundaryCurve::unit_disc(), 4).unwrap();
        assert_eq!(q.measure.atoms.len(), 4);
        for a in &q.measure.atoms {
            assert!((a.weight[(0, 0)] - real(0.25)).norm() < 1e-15);
        }
    }

    #[test]
    fn not_contained() {
        let res = quadrature_measure(&identity(1).scale(0.99), &BoundaryCurve::unit_disc(), 16);
        assert!(matches!(res, Err(Error::NotContained)));
    }

    #[test]
    fn cauchy_examples() {
        let samples = BoundaryCurve::unit_disc().samples(256);
        let ones = vec![real(1.0); 256];
        let zs: Vec<Complex64> = samples.iter().map(|s| s.z).collect();
        assert!((cauchy_transform_scalar(&ones, &samples, real(0.0)).unwrap() - real(1.0)).norm() < 1e-14);
        assert!(cauchy_transform_scalar(&zs, &samples, real(0.0)).unwrap().norm() < 1e-14);
        let t = from_row_major(2, 2, &[c64(0.2, 0.1), real(0.3), real(0.0), c64(-0.4, 0.0)]);
        let c = cauchy_transform_matrix(&ones, &samples, &t).unwrap();
        assert!(frobenius_distance(&c, &identity(2)) < 1e-12);
    }

    #[test]
    fn curve_json_and_specs() {
        let c = BoundaryCurve::parse_spec("ellipse:1.0,0.6").unwrap();
        let s = crate::json::to_string(&c).unwrap();
        assert_eq!(crate::json::from_str::<BoundaryCurve>(&s).unwrap(), c);
        let sampled = BoundaryCurve::sampled(
            BoundaryCurve::unit_disc().samples(16).iter().map(|s| (s.theta, s.z, s.dz)).collect(),
        )
        .unwrap();
        assert!(sampled.is_convex());
        let s = crate::json::to_string(&sampled).unwrap();
        assert_eq!(crate::json::from_str::<BoundaryCurve>(&s).unwrap(), sampled);
        assert!(BoundaryCurve::parse_spec("annulus:1.5").is_err());
        assert!(BoundaryCurve::parse_spec("square").is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let r = numerical_range(&CMatrix::zeros(1, 1), 8).unwrap();
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 9);
        assert!(csv.starts_with("theta,h,re,im"));
    }
}
