//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CoreError {
    #[error("invalid piecewise-linear data: {0}")]
    InvalidPwl(String),

    #[error("function must be non-decreasing")]
    NonMonotone,

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid distortion: {0}")]
    InvalidDistortion(String),

    #[error("distortion must be concave: {0}")]
    NonConcave(String),

    #[error("integral diverges: {0}")]
    DivergentIntegral(String),

    #[error("operation requires non-negative support, found minimum {0}")]
    NegativeSupport(f64),

    #[error("agent index {0} out of range for {1} agents")]
    AgentIndex(usize, usize),

    #[error("no Pareto optimal allocation: cost factors 1+b+c have mixed signs")]
    Unsolvable,

    #[error("all cost factors 1+b+c vanish: use the delta-family route (n = 2 only)")]
    DegenerateAllZero,

    #[error("normalizer 1+b+c{} is zero", if *.0 { "+lambda" } else { "" })]
    ZeroNormalizer(bool),

    #[error("normalizer changes sign during multiplier search at lambda = {0}")]
    NormalizerSignFlip(f64),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("(g1(p)-p)/(g2(p)-p) is not non-decreasing; use the general solver")]
    RatioNotMonotone,

    #[error("side payments must sum to zero, got {0}")]
    NonZeroSum(f64),

    #[error("instance exceeds oracle caps: {0}")]
    CapsExceeded(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
