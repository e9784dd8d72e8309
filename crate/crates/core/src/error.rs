use thiserror::Error;

/// Errors raised by the orbit, embedding and dynamics routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not in {group} (residual {residual:.3e})")]
    NotInGroup { group: String, residual: f64 },

    #[error("matrix is not in the Lie algebra of {group} (residual {residual:.3e})")]
    NotInAlgebra { group: String, residual: f64 },

    #[error("vector is not tangent to the orbit (least-squares residual {residual:.3e})")]
    NotTangent { residual: f64 },

    #[error("numerical rank deficiency: expected rank {expected}, found {found}")]
    RankDeficient { expected: usize, found: usize },

    #[error("moment map residual {residual:.3e} exceeds {tolerance:.1e}")]
    MomentResidual { residual: f64, tolerance: f64 },

    #[error("eigenvalue {value} of factor {factor} lies between the allowed bands")]
    EigenvalueBand { factor: usize, value: f64 },

    #[error("eigenspace of factor {factor} has dimension {found}, expected {expected}")]
    EigenspaceDimension {
        factor: usize,
        expected: usize,
        found: usize,
    },

    #[error("flag consistency check failed: {0}")]
    FlagInconsistent(String),

    #[error("matrix is too close to the divisor det Z = 0 (min singular value {min_singular:.3e}{})",
        .time.map(|t| format!(" at t = {t}")).unwrap_or_default())]
    NearDivisor { min_singular: f64, time: Option<f64> },

    #[error("couplings are not nested (alpha_ij != alpha_max(i,j))")]
    NotNested,

    #[error("state violates normalization (max deviation {deviation:.3e})")]
    Normalization { deviation: f64 },

    #[error("step size must be positive and finite, got {0}")]
    InvalidStep(f64),

    #[error("integration blew up at t = {time} (relative norm deviation {deviation:.3e})")]
    BlowUp { time: f64, deviation: f64 },

    #[error("times must be strictly increasing")]
    NonMonotoneTimes,

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    Parse,
    Invariant,
    Numerical,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Json(_) | Error::Csv(_) => ErrorClass::Parse,
            Error::InvalidSpec(_)
            | Error::DimensionMismatch { .. }
            | Error::NotInGroup { .. }
            | Error::NotInAlgebra { .. }
            | Error::NotTangent { .. }
            | Error::NotNested
            | Error::Normalization { .. }
            | Error::InvalidStep(_)
            | Error::NonMonotoneTimes
            | Error::MomentResidual { .. } => ErrorClass::Invariant,
            Error::RankDeficient { .. }
            | Error::EigenvalueBand { .. }
            | Error::EigenspaceDimension { .. }
            | Error::FlagInconsistent(_)
            | Error::NearDivisor { .. }
            | Error::BlowUp { .. } => ErrorClass::Numerical,
            Error::Io(_) => ErrorClass::Io,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
