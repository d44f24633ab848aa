//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("integrability analysis unavailable: {0}")]
    NotAnalyzable(String),
    #[error("divergent integral: {0}")]
    Divergent(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("state blow-up at t = {time}: |x| = {norm:e}")]
    BlowUp { time: f64, norm: f64 },
    #[error("tilt target infeasible: {0}")]
    TiltInfeasible(String),
    #[error("jump-time gap violation: {0}")]
    GapViolation(String),
    #[error("inadmissible jump: {0}")]
    Inadmissible(String),
    #[error("rank-deficient sigma: {0}")]
    RankDeficient(String),
    #[error("cone condition not certifiable: {0}")]
    ConeNotCertifiable(String),
    #[error("iteration cap reached: {0}")]
    IterationCap(String),
    #[error("not serializable: {0}")]
    NotSerializable(String),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
