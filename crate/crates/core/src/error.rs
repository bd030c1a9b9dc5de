use thiserror::Error;

use crate::qp::QpError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("asymmetric variant needs n_sub divisible by 6 so the 5/6 split lands on a node, got n_sub = {0}")]
    AsymmetricSplit(usize),

    #[error("{what}: expected length {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid material parameters: {0}")]
    Material(String),

    #[error("damage value {0} outside [0, 1]")]
    DamageOutOfRange(f64),

    #[error("plastic strain is not deviatoric (trace {0:e})")]
    NotDeviatoric(f64),

    #[error("invalid load program: {0}")]
    Load(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("plastic step did not converge after {iterations} iterations (residual {residual:e})")]
    PlasticNotConverged { iterations: usize, residual: f64 },

    #[error("damage step: {0}")]
    Qp(#[from] QpError),

    #[error("missing history: {0}")]
    MissingHistory(&'static str),

    #[error("config key `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }
}
