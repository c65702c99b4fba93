use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("zero vector")]
    ZeroVector,
    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("basis is linearly dependent")]
    DependentBasis,
    #[error("points coincide projectively")]
    CoincidentPoints,
    #[error("point not in {space}: {detail}")]
    NotInSpace { space: String, detail: String },
    #[error("lifts lie on different branches (b = {0})")]
    DifferentBranch(f64),
    #[error("cross-ratio undefined for this configuration")]
    CrossRatioUndefined,
    #[error("isotropic vector has no dual")]
    Isotropic,
    #[error("body not admissible: {0}")]
    NotAdmissible(String),
    #[error("samples are not convex: {0}")]
    NonConvex(String),
    #[error("base condition violated: residual {0:e}")]
    BaseCondition(f64),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("singular data: {0}")]
    Singular(String),
    #[error("{what}: value {value:e} exceeds tolerance {tol:e}")]
    Tolerance { what: String, value: f64, tol: f64 },
    #[error("empty input")]
    Empty,
}

pub type Result<T> = std::result::Result<T, GeomError>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(GeomError::DimensionMismatch { expected, got });
    }
    Ok(())
}
