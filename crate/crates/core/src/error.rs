//! Error types shared across the algebraic and numerical modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AlgebraError {
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("noise clash: both operands carry a noise at the root")]
    NoiseClash,
    #[error("unknown label")]
    UnknownLabel,
    #[error("spec invalid: {0}")]
    SpecInvalid(String),
    #[error("grammar is not subcritical: {0}")]
    NotSubcritical(String),
    #[error("requested order exceeds configured bounds")]
    OrderTooLarge,
    #[error("left operand of star2 carries a root noise")]
    MalformedLeft,
    #[error("preparation map violates the compatibility law: {0}")]
    IncompatiblePreparationMap(String),
    #[error("identity check failed: {0}")]
    TheoremMismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("derivative order exceeds the precomputed stencil range")]
    StencilExceeded,
    #[error("samples vanish identically; decay exponent is undefined")]
    DegenerateSamples,
    #[error("point lies outside the grid")]
    OutOfGrid,
    #[error("grid file malformed: {0}")]
    BadGridFile(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}
