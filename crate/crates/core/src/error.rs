use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("map is not isometric (defect {defect:.3e})")]
    NotIsometric { defect: f64 },
    #[error("invalid matrix convex combination: {0}")]
    InvalidCombination(String),
    #[error("weights are not normalized (defect {defect:.3e})")]
    NotNormalized { defect: f64 },
    #[error("coefficient matrix is zero")]
    ZeroCoefficient,
    #[error("operators do not commute (defect {defect:.3e})")]
    NotCommuting { defect: f64 },
    #[error("fit infeasible: residual {residual:.3e} after {iterations} iterations")]
    Infeasible { residual: f64, iterations: usize },
    #[error("atom grid is empty")]
    GridEmpty,
    #[error("atom weight is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NonPsdWeight { min_eigenvalue: f64 },
    #[error("curve is not convex")]
    NonConvexCurve,
    #[error("resolvent is singular or ill-conditioned at {point}")]
    ResolventSingular { point: num_complex::Complex64 },
    #[error("numerical range is not contained in the curve with the requested margin")]
    NotContained,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("rotation parameter {0} is not a rational multiple of 2*pi with small denominator")]
    IrrationalRotation(f64),
    #[error("malformed input: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
