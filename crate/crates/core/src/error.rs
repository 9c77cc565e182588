use thiserror::Error;

use crate::quadrature::QuadratureReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("mismatched phase/weight pair: {0}")]
    Mismatch(String),

    /// The node budget ran out; the partial report is attached.
    #[error("node budget exceeded after {} nodes", .0.nodes_used)]
    BudgetExceeded(Box<QuadratureReport>),

    #[error("phase is not of finite type: {0}")]
    NotFiniteType(String),

    #[error("invalid j0: {0}")]
    InvalidJ0(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),

    #[error("Bang chain failed: {0}")]
    ChainFailed(String),

    #[error("class mismatch: {0}")]
    ClassMismatch(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("insufficient range: {0}")]
    InsufficientRange(String),

    /// Result exceeds f64; `ln_value` is the natural log of the true value.
    #[error("overflow (ln of value = {ln_value})")]
    Overflow { ln_value: f64 },
}

impl Error {
    /// Stable machine-readable tag for diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "DomainError",
            Error::Mismatch(_) => "MismatchError",
            Error::BudgetExceeded(_) => "BudgetExceeded",
            Error::NotFiniteType(_) => "NotFiniteType",
            Error::InvalidJ0(_) => "InvalidJ0",
            Error::OutOfRange(_) => "OutOfRange",
            Error::BudgetExhausted(_) => "BudgetExhausted",
            Error::ChainFailed(_) => "ChainFailed",
            Error::ClassMismatch(_) => "ClassMismatch",
            Error::NoConvergence(_) => "NoConvergence",
            Error::InsufficientRange(_) => "InsufficientRange",
            Error::Overflow { .. } => "Overflow",
        }
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
