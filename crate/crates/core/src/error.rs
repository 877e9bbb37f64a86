use thiserror::Error;

use crate::linalg::Vector;
use crate::simulator::SimulationTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is rank deficient: pivot {index} of {rows} rows has magnitude {pivot:e} (threshold {threshold:e})")]
    Rank {
        index: usize,
        rows: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("input constraint violated on {channel} channel: infinity norm {norm} exceeds 1")]
    Constraint { channel: &'static str, norm: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("no interval index up to {cap} reaches error bound {epsilon:e}; use a larger epsilon")]
    Cap { cap: usize, epsilon: f64 },

    #[error("state diverged at t = {t}")]
    Divergence {
        t: f64,
        last_state: Vector,
        partial: Box<SimulationTrace>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
