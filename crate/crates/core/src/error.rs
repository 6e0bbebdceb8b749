use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("monomial basis for D={dim}, degree={degree} exceeds the size limit")]
    SizeLimit { dim: usize, degree: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Not enough points: need at least {required}, have {available}")]
    NotEnoughPoints { required: usize, available: usize },

    #[error("degenerate polynomial: gradient vanishes at every point")]
    DegeneratePolynomial,

    #[error("not found: {0}")]
    NotFound(String),

    #[error("general position violated: {0}")]
    GeneralPosition(String),

    #[error("hyperplane normal is zero")]
    ZeroNormal,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
