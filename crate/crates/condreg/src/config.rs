//! Run configuration shared by the CLI and the pipeline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Every knob of the fitting pipeline. JSON config files use these exact
/// field names; CLI flags override individual fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Maximum literals per term.
    pub k: usize,
    /// Minimum fraction of points the condition must cover.
    pub mu: f64,
    /// Coverage/loss slack.
    pub gamma: f64,
    /// Failure probability budget.
    pub delta: f64,
    /// Small-term pruning fraction; defaults to `gamma / t_estimate`.
    pub epsilon: Option<f64>,
    /// Spectral deviation scale estimate.
    pub s0: f64,
    /// Estimated number of terms in the target condition.
    pub t_estimate: f64,
    /// Ridge coefficient added to every term loss.
    pub kappa: f64,
    /// Initial (hypothesis-space) parameter radius.
    pub r_init: f64,
    /// Target accuracy radius.
    pub r_final: f64,
    /// Solver tolerance.
    pub solver_tol: f64,
    /// Decompositions per iteration scale.
    pub c_q: f64,
    /// Decomposition radius multiplier scale.
    pub c_rho: f64,
    pub seed: u64,
    /// Worker threads; 0 means all cores.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            k: 2,
            mu: 0.25,
            gamma: 0.1,
            delta: 0.05,
            epsilon: None,
            s0: 0.01,
            t_estimate: 4.0,
            kappa: 0.0,
            r_init: 10.0,
            r_final: 0.05,
            solver_tol: 1e-6,
            c_q: 8.0,
            c_rho: 1.0,
            seed: 0,
            threads: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.k == 0 {
            return fail("k must be at least 1".into());
        }
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return fail(format!("mu must be in (0, 1], got {}", self.mu));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return fail(format!("gamma must be in (0, 1], got {}", self.gamma));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail(format!("delta must be in (0, 1), got {}", self.delta));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0 && eps < 1.0) {
                return fail(format!("epsilon must be in (0, 1), got {eps}"));
            }
        }
        if !(self.s0 > 0.0) {
            return fail("s0 must be positive".into());
        }
        if self.t_estimate < 1.0 {
            return fail("t_estimate must be at least 1".into());
        }
        if self.kappa < 0.0 {
            return fail("kappa must be non-negative".into());
        }
        if !(self.r_final > 0.0 && self.r_final < self.r_init) {
            return fail(format!(
                "need 0 < r_final < r_init, got r_final = {}, r_init = {}",
                self.r_final, self.r_init
            ));
        }
        if !(self.solver_tol > 0.0) {
            return fail("solver_tol must be positive".into());
        }
        if !(self.c_q > 0.0) || !(self.c_rho > 0.0) {
            return fail("c_q and c_rho must be positive".into());
        }
        Ok(())
    }

    /// Pruning fraction: explicit value or `gamma / t_estimate`.
    pub fn effective_epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(self.gamma / self.t_estimate)
    }
}
