//! End-to-end fitting pipeline: terms -> duplication -> pruning -> loss
//! matrices -> list regression -> per-candidate covering -> selection.

use std::time::Instant;

use nalgebra::DVector;

use crate::config::RunConfig;
use crate::cover::{evaluate_candidate, select_final, CandidateSolution, CoverInstance};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::list_regression::{run_list_regression, ListRegParams};
use crate::loss::QuadLoss;
use crate::report::{CandidateReport, Report, Timing, Traces, SCHEMA_VERSION};
use crate::soft_regression::{MassTarget, SoftRegConfig};
use crate::solver::SolverConfig;
use crate::terms::{assign_members, disjointify, enumerate_terms, prune_small};

/// Result of a fit: the full report plus whether selection succeeded.
#[derive(Debug)]
pub struct FitOutcome {
    pub report: Report,
    /// Set when no candidate met the coverage floor; the report still
    /// carries every candidate.
    pub selection_failed: bool,
}

/// Runs the full pipeline on an in-memory dataset.
pub fn fit(data: &Dataset, config: &RunConfig) -> Result<FitOutcome> {
    config.validate()?;
    let t_total = Instant::now();
    if config.k > data.n_bool() {
        return Err(Error::Config(format!(
            "k = {} exceeds the {} Boolean attributes",
            config.k,
            data.n_bool()
        )));
    }

    let t_pre = Instant::now();
    let terms = assign_members(enumerate_terms(data.n_bool(), config.k)?, data)?;
    let full_instance = disjointify(data, &terms);
    let pruned = prune_small(&full_instance, config.effective_epsilon(), config.mu, data.n_rows())?;
    let losses: Vec<QuadLoss> = pruned
        .sub_data
        .iter()
        .map(|td| QuadLoss::from_term_data(td, config.kappa))
        .collect();
    let mass = MassTarget {
        mu_n: config.mu * data.n_rows() as f64,
        n_prime: pruned.n_prime as f64,
    };
    if mass.effective_mu() > 1.0 {
        return Err(Error::Config(format!(
            "mu = {} asks for {} points but the surviving terms hold only {} duplicated points",
            config.mu, mass.mu_n, pruned.n_prime
        )));
    }
    let preprocess_s = t_pre.elapsed().as_secs_f64();

    let t_list = Instant::now();
    let soft_cfg = SoftRegConfig {
        solver: SolverConfig { tol: config.solver_tol, ..Default::default() },
        t_estimate: config.t_estimate,
        ball_radius: None,
        record_history: false,
    };
    let params = ListRegParams {
        mass,
        s0: config.s0,
        epsilon: config.effective_epsilon(),
        delta: config.delta,
        r_init: config.r_init,
        r_final: config.r_final,
        c_q: config.c_q,
        c_rho: config.c_rho,
    };
    let list = run_list_regression(&losses, &params, &soft_cfg, config.seed)?;
    let list_regression_s = t_list.elapsed().as_secs_f64();

    let t_cover = Instant::now();
    let mut reports = Vec::with_capacity(list.candidates.len());
    let mut solutions: Vec<(usize, CandidateSolution)> = Vec::new();
    for (idx, u) in list.candidates.iter().enumerate() {
        match cover_candidate(u, data, &full_instance.terms, config) {
            Ok(sol) => {
                reports.push(CandidateReport::from_solution(&sol));
                solutions.push((idx, sol));
            }
            Err(e) => reports.push(CandidateReport::from_failure(u, e.to_string())),
        }
    }
    let cover_s = t_cover.elapsed().as_secs_f64();

    let only_solutions: Vec<CandidateSolution> =
        solutions.iter().map(|(_, s)| s.clone()).collect();
    let (selected_index, selection_error) =
        match select_final(&only_solutions, config.mu, config.gamma) {
            Ok(local) => (Some(solutions[local].0), None),
            Err(e) => (None, Some(e.to_string())),
        };
    let selection_failed = selected_index.is_none();

    let report = Report {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        n_prime: pruned.n_prime,
        surviving_terms: pruned.terms.len(),
        selected: selected_index.map(|i| reports[i].clone()),
        selected_index,
        selection_error,
        candidates: reports,
        timing: Timing {
            load_s: 0.0,
            preprocess_s,
            list_regression_s,
            cover_s,
            total_s: t_total.elapsed().as_secs_f64(),
        },
        traces: Traces {
            initial_soft_regression: list.initial_trace.clone(),
            list_regression: list.trace.clone(),
        },
    };
    Ok(FitOutcome { report, selection_failed })
}

/// Cover stage for one candidate parameter vector.
fn cover_candidate(
    u: &DVector<f64>,
    data: &Dataset,
    terms: &[crate::terms::Term],
    config: &RunConfig,
) -> Result<CandidateSolution> {
    let instance = CoverInstance::build(terms, u, data, config.mu, config.gamma, config.t_estimate);
    let dnf = instance.greedy_partial_cover(data.n_rows())?;
    evaluate_candidate(u, &dnf, data)
}
