//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by any stage of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at data row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("validation error at data row {row}: {msg}")]
    Validation { row: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dataset generation failed: {0}")]
    Generation(String),

    #[error("all terms pruned; decrease epsilon or mu, or check the data")]
    EmptyModel,

    #[error("solver did not converge within {iterations} iterations (residual {residual:.3e})")]
    SolverStalled {
        iterations: usize,
        residual: f64,
        /// Best iterate reached before hitting the cap.
        partial: Box<crate::solver::SdpSolution>,
    },

    #[error("neighbor problem infeasible: total box capacity {capacity:.6} < 1; mu is too large for this instance")]
    InfeasibleNeighborhood { capacity: f64 },

    #[error("soft regression incomplete after {iterations} iterations: {reason}")]
    SoftRegressionIncomplete {
        iterations: usize,
        reason: String,
        /// Last state reached, usable as a best-effort result.
        state: Box<crate::soft_regression::SoftRegressionState>,
    },

    #[error("list regression degenerate: {0}")]
    DegenerateInstance(String),

    #[error("partial cover: reached {achieved} of {target} target points with no eligible set left")]
    PartialCover { achieved: usize, target: usize },

    #[error("candidate evaluation failed: {0}")]
    Evaluation(String),

    #[error("no candidate meets the coverage requirement; best coverage achieved was {best_coverage:.4}")]
    Selection { best_coverage: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
