//! From candidate parameters back to conditions: greedy weighted partial set
//! cover under the ratio objective, candidate evaluation on raw data, and
//! final model selection.

use nalgebra::DVector;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::terms::{Dnf, Term};

/// Partial-cover instance: per-term raw point sets with the costs
/// `omega_j = |T_j| f_j(u)` (the total pointwise loss of u over the set).
#[derive(Debug, Clone)]
pub struct CoverInstance {
    terms: Vec<Term>,
    costs: Vec<f64>,
    mu: f64,
    gamma: f64,
    t_hat: f64,
}

impl CoverInstance {
    /// Computes set costs for the candidate `u` directly on the raw data.
    pub fn build(terms: &[Term], u: &DVector<f64>, data: &Dataset, mu: f64, gamma: f64, t_hat: f64) -> Self {
        let point_loss: Vec<f64> = (0..data.n_rows())
            .map(|i| {
                let pred: f64 = data.y_row(i).iter().zip(u.iter()).map(|(a, b)| a * b).sum();
                (data.z(i) - pred).powi(2)
            })
            .collect();
        let costs = terms
            .iter()
            .map(|t| t.members().iter().map(|&i| point_loss[i]).sum())
            .collect();
        Self { terms: terms.to_vec(), costs, mu, gamma, t_hat }
    }

    /// Builds an instance from explicit sets and costs (used by tests).
    pub fn from_parts(terms: Vec<Term>, costs: Vec<f64>, mu: f64, gamma: f64, t_hat: f64) -> Self {
        assert_eq!(terms.len(), costs.len());
        Self { terms, costs, mu, gamma, t_hat }
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    /// Greedy partial cover: repeatedly take the eligible set with the best
    /// cost per newly covered point until `(1 - (2/3) gamma) mu N` points
    /// are covered. Ties go to the earliest term.
    pub fn greedy_partial_cover(&self, n: usize) -> Result<Dnf> {
        let target = (1.0 - 2.0 * self.gamma / 3.0) * self.mu * n as f64;
        let eligibility = self.mu * self.gamma * n as f64 / (3.0 * self.t_hat);
        let mut covered = vec![false; n];
        let mut covered_count = 0usize;
        let mut chosen_mask = vec![false; self.terms.len()];
        let mut chosen = Vec::new();
        while (covered_count as f64) < target {
            let mut best: Option<(f64, usize, usize)> = None;
            for (j, term) in self.terms.iter().enumerate() {
                if chosen_mask[j] {
                    continue;
                }
                let new = term.members().iter().filter(|&&i| !covered[i]).count();
                if new == 0 || (new as f64) < eligibility {
                    continue;
                }
                let ratio = self.costs[j] / new as f64;
                if best.is_none_or(|(r, _, _)| ratio < r) {
                    best = Some((ratio, j, new));
                }
            }
            let Some((_, j, new)) = best else {
                return Err(Error::PartialCover {
                    achieved: covered_count,
                    target: target.ceil() as usize,
                });
            };
            chosen_mask[j] = true;
            chosen.push(Term::new(self.terms[j].literals().to_vec()));
            for &i in self.terms[j].members() {
                covered[i] = true;
            }
            covered_count += new;
        }
        Ok(Dnf::new(chosen))
    }
}

/// A candidate pair: parameters plus the condition the cover stage found for
/// them, with its raw-data coverage and conditional loss.
#[derive(Debug, Clone)]
pub struct CandidateSolution {
    pub u: DVector<f64>,
    pub dnf: Dnf,
    pub coverage: f64,
    pub cond_loss: f64,
}

/// Evaluates a (u, dnf) pair on raw data: fraction of rows satisfying the
/// condition and the mean squared loss over them.
pub fn evaluate_candidate(u: &DVector<f64>, dnf: &Dnf, data: &Dataset) -> Result<CandidateSolution> {
    if dnf.is_empty() {
        return Err(Error::Evaluation("empty condition".into()));
    }
    dnf.check_attrs(data.n_bool())?;
    if u.len() != data.n_feat() {
        return Err(Error::Evaluation(format!(
            "parameter dimension {} does not match the dataset's {} features",
            u.len(),
            data.n_feat()
        )));
    }
    let rows = dnf.covered_rows(data);
    if rows.is_empty() {
        return Err(Error::Evaluation("condition covers no points".into()));
    }
    let loss: f64 = rows
        .iter()
        .map(|&i| {
            let pred: f64 = data.y_row(i).iter().zip(u.iter()).map(|(a, b)| a * b).sum();
            (data.z(i) - pred).powi(2)
        })
        .sum::<f64>()
        / rows.len() as f64;
    Ok(CandidateSolution {
        u: u.clone(),
        dnf: dnf.clone(),
        coverage: rows.len() as f64 / data.n_rows() as f64,
        cond_loss: loss,
    })
}

/// Picks the lowest-loss candidate among those with coverage at least
/// `(1 - gamma) mu`; ties break to higher coverage, then lower index.
/// Returns the winning index.
pub fn select_final(candidates: &[CandidateSolution], mu: f64, gamma: f64) -> Result<usize> {
    let floor = (1.0 - gamma) * mu;
    let mut best: Option<usize> = None;
    let mut best_coverage_seen: f64 = 0.0;
    for (i, cand) in candidates.iter().enumerate() {
        best_coverage_seen = best_coverage_seen.max(cand.coverage);
        if cand.coverage < floor {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => {
                let cur = &candidates[b];
                cand.cond_loss < cur.cond_loss
                    || (cand.cond_loss == cur.cond_loss && cand.coverage > cur.coverage)
            }
        };
        if better {
            best = Some(i);
        }
    }
    best.ok_or(Error::Selection { best_coverage: best_coverage_seen })
}
