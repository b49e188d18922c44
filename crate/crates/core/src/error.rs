use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension must be 2 or 3, got {0}")]
    BadDimension(usize),

    #[error("stretch {index} must be positive and finite, got {value}")]
    NonPositiveStretch { index: usize, value: f64 },

    #[error("dimension mismatch: energy expects n={expected}, got n={found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for n={dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("pair conditions need distinct indices, got ({0}, {0})")]
    SameIndex(usize),

    #[error("unknown energy '{0}'")]
    UnknownEnergy(String),

    #[error("energy '{energy}' requires parameter '{key}'")]
    MissingParam { energy: String, key: String },

    #[error("parameter '{key}' = {value} is invalid: {reason}")]
    InvalidParam {
        key: String,
        value: f64,
        reason: String,
    },

    #[error("deformation gradient must have positive determinant, got {0}")]
    NonPositiveDeterminant(f64),

    #[error("deformation gradient has non-finite entries")]
    NonFinite,

    #[error("cannot keep det(F + t xi (x) eta) > 0 after {0} step halvings; F is nearly degenerate")]
    StepUnderflow(usize),

    #[error("vector is not a unit vector (norm {0})")]
    NotUnit(f64),

    #[error("{what} = {value} lies outside [{lo}, {hi}]")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("removable singularity at p={p}, theta={theta}; request the limit value explicitly")]
    RemovableSingularity { p: f64, theta: f64 },

    #[error("negative square-root argument {0}")]
    NegativeRadicand(f64),

    #[error("invalid request: {0}")]
    InvalidRequest(String),

    #[error("parse error: {0}")]
    Parse(String),
}
