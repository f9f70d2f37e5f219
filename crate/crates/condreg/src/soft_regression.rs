//! Outer soft-regression loop: alternate the joint trace-regularized solve
//! with multiplicative outlier downweighting until the enclosing ellipsoid
//! is small.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::QuadLoss;
use crate::solver::{solve_neighbor_qp, SoftSdp, SolverConfig};

/// Mass accounting for the duplicated instance: `mu_n` is the target good
/// mass (mu times the raw point count) and `n_prime` the duplicated size.
/// The effective good fraction is `mu_n / n_prime`.
#[derive(Debug, Clone, Copy)]
pub struct MassTarget {
    pub mu_n: f64,
    pub n_prime: f64,
}

impl MassTarget {
    pub fn effective_mu(&self) -> f64 {
        self.mu_n / self.n_prime
    }
}

#[derive(Debug, Clone)]
pub struct SoftRegConfig {
    pub solver: SolverConfig,
    /// Estimated number of terms in the target condition.
    pub t_estimate: f64,
    /// Hypothesis-space projection radius for the joint solve; defaults to
    /// the run radius when unset.
    pub ball_radius: Option<f64>,
    /// Record the weight vector after every iteration (used by invariant
    /// checks); off by default.
    pub record_history: bool,
}

impl Default for SoftRegConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            t_estimate: 4.0,
            ball_radius: None,
            record_history: false,
        }
    }
}

/// One per-iteration trace record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SoftRegTrace {
    pub iteration: usize,
    pub trace_y: f64,
    pub nonzero_weights: usize,
    pub objective: f64,
}

/// Final state of the soft-regression loop.
#[derive(Debug, Clone)]
pub struct SoftRegressionState {
    /// Outlier weights; entries only ever decrease and stick at zero.
    pub c: Vec<f64>,
    pub w_hat: Vec<DVector<f64>>,
    pub y_hat: DMatrix<f64>,
    pub iteration: usize,
    pub objective: f64,
    pub trace: Vec<SoftRegTrace>,
    /// Weight vectors after each iteration when history recording is on.
    pub c_history: Vec<Vec<f64>>,
}

/// Result of one weight update.
#[derive(Debug, Clone)]
pub struct WeightUpdate {
    pub c: Vec<f64>,
    pub z: Vec<f64>,
    pub z_max: f64,
    /// Index zeroed by this update; `None` means the update was a no-op
    /// because no term lost to its neighborhood (z_max <= 0).
    pub zeroed: Option<usize>,
}

/// Pure update rule: `c'_i = c_i (z_max - z_i) / z_max` over the nonzero
/// weights, clamped to keep weights monotone, with the argmax zeroed exactly.
pub fn apply_weight_update(c: &[f64], z: &[f64]) -> (Vec<f64>, f64, Option<usize>) {
    assert_eq!(c.len(), z.len());
    let mut z_max = f64::NEG_INFINITY;
    let mut arg = None;
    for (i, (&ci, &zi)) in c.iter().zip(z).enumerate() {
        if ci != 0.0 && zi > z_max {
            z_max = zi;
            arg = Some(i);
        }
    }
    if !(z_max > 0.0) {
        return (c.to_vec(), z_max, None);
    }
    let mut out: Vec<f64> = c
        .iter()
        .zip(z)
        .map(|(&ci, &zi)| (ci * (z_max - zi) / z_max).clamp(0.0, ci))
        .collect();
    out[arg.expect("argmax exists when z_max > 0")] = 0.0;
    (out, z_max, arg)
}

/// Runs the neighborhood problems for all terms and downweights the ones
/// whose own parameters beat their best neighborhood mixture the most.
pub fn update_weights(
    c: &[f64],
    losses: &[QuadLoss],
    w_hat: &[DVector<f64>],
    mu_n: f64,
    solver: &SolverConfig,
) -> Result<WeightUpdate> {
    if c.iter().all(|&ci| ci == 0.0) {
        return Err(Error::Parameter("all outlier weights are zero".into()));
    }
    let sizes: Vec<f64> = losses.iter().map(|l| l.weight()).collect();
    let z: Vec<f64> = losses
        .par_iter()
        .zip(w_hat.par_iter())
        .map(|(loss, wi)| {
            let neighbor = solve_neighbor_qp(loss, w_hat, &sizes, mu_n, solver)?;
            Ok(neighbor.loss - loss.eval(wi))
        })
        .collect::<Result<_>>()?;
    let (c_new, z_max, zeroed) = apply_weight_update(c, &z);
    Ok(WeightUpdate { c: c_new, z, z_max, zeroed })
}

/// Soft-regression outer loop.
///
/// `s` is the spectral deviation estimate for this run and `r` its radius;
/// the trace penalty starts at `sqrt(8 mu_eff) N' t_hat s / r` and the loop
/// ends once `tr(Y) <= 6 r^2 / mu_eff`. Errors carry the last state so
/// callers can salvage a partial result.
pub fn run_soft_regression(
    losses: &[QuadLoss],
    mass: MassTarget,
    s: f64,
    r: f64,
    origin: &DVector<f64>,
    cfg: &SoftRegConfig,
) -> Result<SoftRegressionState> {
    let m = losses.len();
    if m == 0 {
        return Err(Error::Parameter("soft regression needs at least one term".into()));
    }
    if !(s > 0.0) {
        return Err(Error::Parameter("spectral estimate S must be positive".into()));
    }
    if !(r > 0.0) {
        return Err(Error::Parameter("radius must be positive".into()));
    }
    if cfg.t_estimate < 1.0 {
        return Err(Error::Parameter("t_estimate must be at least 1".into()));
    }
    if !(mass.mu_n > 0.0) || mass.effective_mu() > 1.0 + 1e-9 {
        return Err(Error::Parameter(format!(
            "mass target out of range: mu_n = {}, n_prime = {}",
            mass.mu_n, mass.n_prime
        )));
    }

    let lambda = (8.0 * mass.mu_n * mass.n_prime).sqrt() * cfg.t_estimate * s / r;
    let trace_bound = 6.0 * r * r / mass.effective_mu();
    let ball = cfg.ball_radius.unwrap_or(r);
    let mut sdp = SoftSdp::new(losses, origin.clone(), ball, cfg.solver)?;

    let mut c = vec![1.0; m];
    let mut trace = Vec::new();
    let mut c_history = Vec::new();
    let cap = m + 10;
    let mut last_state: Option<SoftRegressionState> = None;
    for iteration in 1..=cap {
        // A stalled joint solve still carries a usable iterate; surface it as
        // an incomplete state rather than failing the whole run.
        let (sol, stalled) = match sdp.solve(&c, lambda) {
            Ok(sol) => (sol, None),
            Err(Error::SolverStalled { residual, partial, .. }) => (*partial, Some(residual)),
            Err(e) => return Err(e),
        };
        let nonzero = c.iter().filter(|&&ci| ci != 0.0).count();
        trace.push(SoftRegTrace {
            iteration,
            trace_y: sol.y.trace(),
            nonzero_weights: nonzero,
            objective: sol.objective,
        });
        if cfg.record_history {
            c_history.push(c.clone());
        }
        let state = SoftRegressionState {
            c: c.clone(),
            w_hat: sol.w_list.clone(),
            y_hat: sol.y.clone(),
            iteration,
            objective: sol.objective,
            trace: trace.clone(),
            c_history: c_history.clone(),
        };
        if let Some(residual) = stalled {
            return Err(Error::SoftRegressionIncomplete {
                iterations: iteration,
                reason: format!("joint solve stalled at residual {residual:.3e}"),
                state: Box::new(state),
            });
        }
        if sol.y.trace() <= trace_bound {
            return Ok(state);
        }
        let update = update_weights(&c, losses, &sol.w_list, mass.mu_n, &cfg.solver)?;
        if update.zeroed.is_none() {
            return Err(Error::SoftRegressionIncomplete {
                iterations: iteration,
                reason: format!(
                    "ellipsoid trace {:.6e} exceeds the bound {:.6e} but every term already \
                     matches its neighborhood (z_max = {:.3e})",
                    sol.y.trace(),
                    trace_bound,
                    update.z_max
                ),
                state: Box::new(state),
            });
        }
        c = update.c;
        if c.iter().all(|&ci| ci == 0.0) {
            return Err(Error::SoftRegressionIncomplete {
                iterations: iteration,
                reason: "all terms were downweighted to zero".into(),
                state: Box::new(state),
            });
        }
        last_state = Some(state);
    }
    Err(Error::SoftRegressionIncomplete {
        iterations: cap,
        reason: "iteration cap exceeded without meeting the trace bound".into(),
        state: Box::new(last_state.expect("at least one iteration ran")),
    })
}
