//! Conditional linear regression: jointly find a k-DNF condition covering at
//! least a mu-fraction of a dataset and a linear predictor with low squared
//! loss on that subset.
//!
//! The pipeline groups points into k-DNF terms, precomputes per-term
//! quadratic losses, alternates a trace-regularized joint fit with outlier
//! downweighting, narrows the parameter list by clustered radius halving,
//! and finally converts each surviving parameter vector into a condition by
//! greedy partial set cover.

pub mod clustering;
pub mod config;
pub mod cover;
pub mod dataset;
pub mod error;
pub mod list_regression;
pub mod loss;
pub mod pipeline;
pub mod report;
pub mod soft_regression;
pub mod solver;
pub mod terms;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use pipeline::{fit, FitOutcome};
pub use report::Report;
