//! List regression: radius-halving clustered re-fitting that produces a
//! short list of candidate parameter vectors, one of them close to the
//! best conditional fit.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::padded_decomposition;
use crate::error::{Error, Result};
use crate::loss::QuadLoss;
use crate::soft_regression::{run_soft_regression, MassTarget, SoftRegConfig, SoftRegTrace};

#[derive(Debug, Clone)]
pub struct ListRegParams {
    pub mass: MassTarget,
    /// Spectral deviation estimate, passed straight into every joint solve.
    pub s0: f64,
    /// Small-term fraction; also loosens the candidate weight threshold.
    pub epsilon: f64,
    /// Failure probability budget across iterations.
    pub delta: f64,
    pub r_init: f64,
    pub r_final: f64,
    /// Decomposition count scale (the analysis uses 112; desk scale needs
    /// far fewer).
    pub c_q: f64,
    /// Scale on the decomposition radius multiplier `8 ln(2 / mu)`.
    pub c_rho: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ListRegTrace {
    pub iteration: usize,
    pub radius: f64,
    pub assigned: usize,
    pub clusters_per_decomposition: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ListRegressionResult {
    /// Candidate parameter vectors, pairwise more than `4 r_final` apart.
    pub candidates: Vec<DVector<f64>>,
    /// Final per-term parameters; `None` once a term failed aggregation.
    pub w_hat_final: Vec<Option<DVector<f64>>>,
    /// Number of completed decomposition rounds.
    pub iterations: usize,
    pub radius_schedule: Vec<f64>,
    pub trace: Vec<ListRegTrace>,
    /// Per-iteration records of the initial whole-instance fit.
    pub initial_trace: Vec<SoftRegTrace>,
}

fn derive_seed(seed: u64, ell: u64, h: u64) -> u64 {
    // splitmix64 over a per-(iteration, decomposition) tag.
    let mut x = seed ^ (ell << 40) ^ (h.wrapping_add(1));
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Majority aggregation across decompositions: the first value that is
/// within `r_ell / 3` of at least half of the assigned values.
pub fn select_h0(w_bars: &[Option<DVector<f64>>], r_ell: f64) -> Option<DVector<f64>> {
    let assigned: Vec<&DVector<f64>> = w_bars.iter().flatten().collect();
    if assigned.is_empty() {
        return None;
    }
    let need = assigned.len(); // count * 2 >= need expresses "at least half"
    for cand in &assigned {
        let close = assigned.iter().filter(|w| (**w - *cand).norm() <= r_ell / 3.0).count();
        if close * 2 >= need {
            return Some((*cand).clone());
        }
    }
    None
}

/// Greedy maximal candidate extraction: accept a parameter point as a new
/// candidate if its `2 r_final` ball holds at least `(1 - epsilon) mu_n` of
/// term weight and it keeps more than `4 r_final` distance to all accepted.
pub fn extract_candidates(
    assigned: &[(usize, DVector<f64>)],
    weights: &[f64],
    r_final: f64,
    epsilon: f64,
    mu_n: f64,
) -> Vec<DVector<f64>> {
    let threshold = (1.0 - epsilon) * mu_n;
    let mut accepted: Vec<DVector<f64>> = Vec::new();
    for (_, u) in assigned {
        if accepted.iter().any(|prev| (prev - u).norm() <= 4.0 * r_final) {
            continue;
        }
        let ball_weight: f64 = assigned
            .iter()
            .filter(|(_, w)| (w - u).norm() <= 2.0 * r_final)
            .map(|(j, _)| weights[*j])
            .sum();
        if ball_weight >= threshold {
            accepted.push(u.clone());
        }
    }
    accepted
}

/// Runs the full list-regression loop over a pruned disjoint instance.
pub fn run_list_regression(
    losses: &[QuadLoss],
    params: &ListRegParams,
    soft_cfg: &SoftRegConfig,
    seed: u64,
) -> Result<ListRegressionResult> {
    let m = losses.len();
    if m == 0 {
        return Err(Error::Parameter("list regression needs at least one term".into()));
    }
    if !(params.r_final > 0.0 && params.r_final < params.r_init) {
        return Err(Error::Config(format!(
            "need 0 < r_final < r_init, got r_final = {}, r_init = {}",
            params.r_final, params.r_init
        )));
    }
    if !(params.epsilon > 0.0 && params.epsilon < 1.0) || !(params.delta > 0.0 && params.delta < 1.0) {
        return Err(Error::Config("epsilon and delta must lie in (0, 1)".into()));
    }
    let weights: Vec<f64> = losses.iter().map(|l| l.weight()).collect();
    let d = losses[0].dim();
    let mu_eff = params.mass.effective_mu();
    let rho_mult = (params.c_rho * 8.0 * (2.0 / mu_eff).ln()).max(2.0 + 1e-9);

    // Initial joint fit over the whole hypothesis ball.
    let origin = DVector::zeros(d);
    let initial = match run_soft_regression(
        losses,
        params.mass,
        params.s0,
        params.r_init,
        &origin,
        soft_cfg,
    ) {
        Ok(state) => state,
        // A partial state still carries usable per-term parameters.
        Err(Error::SoftRegressionIncomplete { state, .. }) => *state,
        Err(e) => return Err(e),
    };
    let initial_trace = initial.trace.clone();
    let mut assigned: Vec<Option<DVector<f64>>> = initial.w_hat.into_iter().map(Some).collect();

    let mut radius = params.r_init;
    let mut radius_schedule = vec![radius];
    let mut trace = Vec::new();
    let mut ell = 0usize;
    loop {
        ell += 1;
        let live: Vec<(usize, DVector<f64>)> = assigned
            .iter()
            .enumerate()
            .filter_map(|(i, w)| w.as_ref().map(|w| (i, w.clone())))
            .collect();
        if live.is_empty() {
            return Err(Error::DegenerateInstance(
                "every term became unassigned; raise r_final or the spectral estimate".into(),
            ));
        }
        if radius < params.r_final / 2.0 {
            let candidates =
                extract_candidates(&live, &weights, params.r_final, params.epsilon, params.mass.mu_n);
            return Ok(ListRegressionResult {
                candidates,
                w_hat_final: assigned,
                iterations: ell - 1,
                radius_schedule,
                trace,
                initial_trace,
            });
        }

        let q = ((params.c_q * ((ell * (ell + 1)) as f64 / params.delta).ln()).ceil() as usize).max(1);
        let tau = 2.0 * radius;
        let points: Vec<DVector<f64>> = live.iter().map(|(_, w)| w.clone()).collect();
        // Independent decompositions; each returns per-term fits for this h.
        let per_h: Vec<(Vec<Option<DVector<f64>>>, usize)> = (0..q)
            .into_par_iter()
            .map(|h| {
                let seed_h = derive_seed(seed, ell as u64, h as u64);
                let mut w_bar: Vec<Option<DVector<f64>>> = vec![None; m];
                let part = match padded_decomposition(&points, rho_mult, tau, seed_h) {
                    Ok(p) => p,
                    Err(_) => return (w_bar, 0),
                };
                let n_clusters = part.n_clusters();
                for cluster in &part.clusters {
                    let cluster_losses: Vec<QuadLoss> =
                        cluster.members.iter().map(|&j| losses[live[j].0].clone()).collect();
                    let u = points[cluster.center].clone();
                    let run_radius = cluster.radius + radius;
                    let run = run_soft_regression(
                        &cluster_losses,
                        params.mass,
                        params.s0,
                        run_radius,
                        &u,
                        soft_cfg,
                    );
                    let w_hat = match run {
                        Ok(state) => state.w_hat,
                        Err(Error::SoftRegressionIncomplete { state, .. }) => state.w_hat,
                        // Cluster too small or ill-posed: its terms stay
                        // unassigned for this decomposition.
                        Err(_) => continue,
                    };
                    for (local, &j) in cluster.members.iter().enumerate() {
                        w_bar[live[j].0] = Some(w_hat[local].clone());
                    }
                }
                (w_bar, n_clusters)
            })
            .collect();

        let clusters_per_decomposition: Vec<usize> = per_h.iter().map(|(_, n)| *n).collect();
        for (i, slot) in assigned.iter_mut().enumerate() {
            if slot.is_none() {
                continue;
            }
            let samples: Vec<Option<DVector<f64>>> =
                per_h.iter().map(|(w_bar, _)| w_bar[i].clone()).collect();
            *slot = select_h0(&samples, radius);
        }
        trace.push(ListRegTrace {
            iteration: ell,
            radius,
            assigned: assigned.iter().filter(|w| w.is_some()).count(),
            clusters_per_decomposition,
        });
        radius /= 2.0;
        radius_schedule.push(radius);
    }
}
