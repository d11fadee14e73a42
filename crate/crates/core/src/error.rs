use thiserror::Error;

use crate::continuation::Branch;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem specification: {0}")]
    InvalidSpec(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid options: {0}")]
    InvalidOptions(String),

    #[error("{what} is outside its domain (value {value:e})")]
    Domain { what: &'static str, value: f64 },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("damping could not keep the iterate positive (min value {min_value:e} at node {node})")]
    PositivityLoss { node: usize, min_value: f64 },

    #[error("monotone iteration diverged: sup norm {sup_norm:e} exceeded cap {cap:e}")]
    Divergence { sup_norm: f64, cap: f64 },

    #[error("monotone iteration lost monotonicity at step {step}: decrease {decrease:e} at node {node}")]
    MonotonicityViolation {
        step: usize,
        node: usize,
        decrease: f64,
    },

    #[error("Rayleigh quotient of the zero function")]
    ZeroFunction,

    #[error("branch has no fold (dλ/ds never changes sign)")]
    NoFold,

    #[error("query λ = {query} lies within {resolution:e} of the fold at {fold}")]
    QueryTooCloseToFold {
        query: f64,
        fold: f64,
        resolution: f64,
    },

    #[error("tail has {found} points with sup norm in range, need at least {needed}")]
    TailTooShort { found: usize, needed: usize },

    #[error("continuation step size underflow at λ = {lambda}")]
    StepFailure {
        lambda: f64,
        partial: Box<Branch>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
