use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid direction: {0}")]
    InvalidDirection(String),

    #[error("point ({x}, {y}) lies outside the domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    /// The point lies on a facet edge, where the gradient is not defined.
    #[error("point ({x}, {y}) is not a regular point of the function")]
    NonRegular { x: f64, y: f64 },

    #[error("family not applicable: {0}")]
    NotApplicable(String),

    #[error("norm undefined: {0}")]
    NormUndefined(String),

    #[error("both norms vanish; the function is identically zero")]
    ZeroFunction,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("envelope construction failed: {0}")]
    Hull(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidDomain(_) => "invalid-domain",
            Error::InvalidDirection(_) => "invalid-direction",
            Error::OutsideDomain { .. } => "outside-domain",
            Error::InvalidConstraint(_) => "invalid-constraint",
            Error::NonRegular { .. } => "non-regular",
            Error::NotApplicable(_) => "not-applicable",
            Error::NormUndefined(_) => "norm-undefined",
            Error::ZeroFunction => "zero-function",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Hull(_) => "hull",
            Error::Json(_) => "json",
        }
    }
}
