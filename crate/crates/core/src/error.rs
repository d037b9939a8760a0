use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BbsError {
    #[error("site 0 is outside the window and the gap is not vacuum; cannot anchor the path")]
    AnchorUnresolvable,
    #[error("carrier undefined: {0}")]
    CarrierUndefined(&'static str),
    #[error("inverse undefined: {0}")]
    InverseUndefined(&'static str),
    #[error("valid span exhausted at step {step}")]
    SpanExhausted { step: usize },
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("supercritical parameters: p0 + p1 = {0} >= 1")]
    Supercritical(f64),
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("eigen solver did not converge within {0} iterations")]
    EigenFailure(usize),
    #[error("chain rejected: {0}")]
    SpecRejected(String),
    #[error("no particle at a site >= 1 to tag")]
    NoTaggedParticle,
    #[error("column {column} has no odd gap between zeros; the current does not determine it")]
    ColumnAmbiguous { column: i64 },
    #[error("insufficient replicas: need at least {need}, got {got}")]
    InsufficientReplicas { need: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, BbsError>;
