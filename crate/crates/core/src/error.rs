use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MpkError {
    #[error("matrix is not symplectic: residual {residual:.3e} exceeds {tolerance:.1e}")]
    NotSymplectic { residual: f64, tolerance: f64 },
    #[error("matrix is not symmetric: asymmetry {residual:.3e}")]
    NonSymmetricInput { residual: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },
    #[error("matrix is singular or badly conditioned (condition {condition:.3e})")]
    SingularInput { condition: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("image of the subspace collapses under the map")]
    DimensionCollapse,
    #[error("degenerate geometry: volume {volume:.3e}")]
    DegenerateGeometry { volume: f64 },
    #[error("output splitting is ill-conditioned (condition {condition:.3e})")]
    IllConditionedSplit { condition: f64 },
    #[error("B block has rank zero; no integral representation")]
    RankZero,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grids do not match: {0}")]
    GridMismatch(String),
    #[error("aliasing risk in {source_op}: measured {measured:.3e}, bound {bound:.3e}")]
    AliasRisk { source_op: String, measured: f64, bound: f64 },
    #[error("structural conditions violated: {0}")]
    ConditionsViolated(String),
    #[error("insufficient support: {usable} usable samples, need {required}")]
    InsufficientSupport { usable: usize, required: usize },
    #[error("B block is invertible; no sharpness witness exists")]
    FreeBlock,
    #[error("flow exponent too large: |t|*||JM|| = {value:.3e}")]
    ConditioningGuard { value: f64 },
    #[error("B block vanishes at t = {t}")]
    DegenerateTime { t: f64 },
    #[error("certificate is not isotropic: residual {residual:.3e}")]
    NonIsotropic { residual: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl MpkError {
    /// Numerical guards (as opposed to malformed input).
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            MpkError::AliasRisk { .. }
                | MpkError::ConditioningGuard { .. }
                | MpkError::IllConditionedSplit { .. }
                | MpkError::DegenerateGeometry { .. }
                | MpkError::DimensionCollapse
                | MpkError::InsufficientSupport { .. }
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            MpkError::NotSymplectic { .. } => "NotSymplectic",
            MpkError::NonSymmetricInput { .. } => "NonSymmetricInput",
            MpkError::SingularInput { .. } => "SingularInput",
            MpkError::NotPositiveSemidefinite { .. } => "NotPositiveSemidefinite",
            MpkError::DimensionMismatch { .. } => "DimensionMismatch",
            MpkError::DimensionCollapse => "DimensionCollapse",
            MpkError::DegenerateGeometry { .. } => "DegenerateGeometry",
            MpkError::IllConditionedSplit { .. } => "IllConditionedSplit",
            MpkError::RankZero => "RankZero",
            MpkError::InvalidGrid(_) => "InvalidGrid",
            MpkError::GridMismatch(_) => "GridMismatch",
            MpkError::AliasRisk { .. } => "AliasRisk",
            MpkError::ConditionsViolated(_) => "ConditionsViolated",
            MpkError::InsufficientSupport { .. } => "InsufficientSupport",
            MpkError::FreeBlock => "FreeBlock",
            MpkError::ConditioningGuard { .. } => "ConditioningGuard",
            MpkError::DegenerateTime { .. } => "DegenerateTime",
            MpkError::NonIsotropic { .. } => "NonIsotropic",
            MpkError::Parse(_) => "Parse",
            MpkError::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for MpkError {
    fn from(e: std::io::Error) -> Self {
        MpkError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, MpkError>;
