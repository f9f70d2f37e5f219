//! Run report: a single JSON document echoing the configuration, every
//! candidate pair, the selected solution, timings, and traces.

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::cover::CandidateSolution;
use crate::list_regression::ListRegTrace;
use crate::soft_regression::SoftRegTrace;
use crate::terms::Dnf;

pub const SCHEMA_VERSION: u32 = 1;

/// One candidate pair in the report. `dnf` and the metrics are absent when
/// the cover stage failed for this parameter vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateReport {
    pub u: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dnf: Option<Dnf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coverage: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cond_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cover_error: Option<String>,
}

impl CandidateReport {
    pub fn from_solution(sol: &CandidateSolution) -> Self {
        Self {
            u: sol.u.iter().copied().collect(),
            dnf: Some(sol.dnf.clone()),
            coverage: Some(sol.coverage),
            cond_loss: Some(sol.cond_loss),
            cover_error: None,
        }
    }

    pub fn from_failure(u: &nalgebra::DVector<f64>, err: String) -> Self {
        Self {
            u: u.iter().copied().collect(),
            dnf: None,
            coverage: None,
            cond_loss: None,
            cover_error: Some(err),
        }
    }
}

/// Wall-clock seconds per phase. The only part of a report that varies
/// between identical runs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Timing {
    pub load_s: f64,
    pub preprocess_s: f64,
    pub list_regression_s: f64,
    pub cover_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Traces {
    pub initial_soft_regression: Vec<SoftRegTrace>,
    pub list_regression: Vec<ListRegTrace>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub config: RunConfig,
    /// Duplicated instance size after pruning.
    pub n_prime: usize,
    /// Terms surviving the pruning step.
    pub surviving_terms: usize,
    pub candidates: Vec<CandidateReport>,
    /// Index into `candidates` of the selected solution.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selected_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selected: Option<CandidateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection_error: Option<String>,
    pub timing: Timing,
    pub traces: Traces,
}

impl Report {
    /// Serializes with timing fields zeroed, for byte-level comparisons.
    pub fn to_json_without_timing(&self) -> serde_json::Result<String> {
        let mut clone = self.clone();
        clone.timing = Timing::default();
        serde_json::to_string_pretty(&clone)
    }
}
