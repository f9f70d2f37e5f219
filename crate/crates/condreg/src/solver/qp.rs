//! Neighborhood QP: minimize one term's loss over convex mixtures of all
//! terms' current parameters, with per-term box caps `2 |t_j| / (mu N)`.
//!
//! Solved in the mixing coefficients, where the objective is an explicit
//! convex quadratic, by FISTA with exact projection onto the capped simplex.

use nalgebra::{DMatrix, DVector};

use super::SolverConfig;
use crate::error::{Error, Result};
use crate::loss::QuadLoss;

/// Optimal mixture for one term's neighborhood problem.
#[derive(Debug, Clone)]
pub struct NeighborSolution {
    /// Mixing coefficients over all terms; sums to one within 1e-8.
    pub a: Vec<f64>,
    /// The mixed parameter `sum_j a_j w_hat_j`.
    pub w_tilde: DVector<f64>,
    /// Loss of the mixed parameter under the term's own QuadLoss.
    pub loss: f64,
}

/// Exact Euclidean projection onto `{a : sum a = 1, 0 <= a <= caps}`.
///
/// Sweeps the 2m breakpoints of the piecewise-linear sum function; the
/// multiplier is computed in closed form on the crossing segment.
fn project_capped_simplex(p: &[f64], caps: &[f64]) -> Vec<f64> {
    let m = p.len();
    // Breakpoints where coordinate i starts (p_i - caps_i) or stops (p_i)
    // being an active, unclamped coordinate as theta increases.
    let mut events: Vec<(f64, usize, bool)> = Vec::with_capacity(2 * m);
    for i in 0..m {
        events.push((p[i] - caps[i], i, true)); // becomes active
        events.push((p[i], i, false)); // becomes zero
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    // At theta below all breakpoints every coordinate is clamped at its cap.
    let mut const_sum: f64 = caps.iter().sum();
    let mut active_p = 0.0f64;
    let mut n_active = 0usize;
    let eval = |const_sum: f64, active_p: f64, n_active: usize, theta: f64| {
        const_sum + active_p - n_active as f64 * theta
    };

    let mut theta = f64::NEG_INFINITY;
    for &(at, i, becomes_active) in &events {
        // Does the target sum = 1 fall inside (theta, at]?
        if n_active > 0 {
            let t = (const_sum + active_p - 1.0) / n_active as f64;
            if t >= theta && t <= at {
                theta = t;
                return finish(p, caps, theta);
            }
        } else if (eval(const_sum, active_p, 0, at) - 1.0).abs() <= 1e-12 {
            // Flat segment already at the target: any theta in it works.
            theta = at;
            return finish(p, caps, theta);
        }
        theta = at;
        if becomes_active {
            const_sum -= caps[i];
            active_p += p[i];
            n_active += 1;
        } else {
            active_p -= p[i];
            n_active -= 1;
        }
    }
    // Total cap mass equals one: the box forces a = caps.
    caps.to_vec()
}

fn finish(p: &[f64], caps: &[f64], theta: f64) -> Vec<f64> {
    let mut a: Vec<f64> = p.iter().zip(caps).map(|(&pi, &ui)| (pi - theta).clamp(0.0, ui)).collect();
    // Spread the last-bits rounding error over the unclamped coordinates.
    let resid = 1.0 - a.iter().sum::<f64>();
    if resid != 0.0 {
        let free: Vec<usize> = (0..a.len()).filter(|&i| a[i] > 0.0 && a[i] < caps[i]).collect();
        if !free.is_empty() {
            let share = resid / free.len() as f64;
            for i in free {
                a[i] = (a[i] + share).clamp(0.0, caps[i]);
            }
        }
    }
    a
}

/// Solves the neighborhood problem for one term.
///
/// `w_hat` are the current per-term parameters, `sizes` the term weights
/// `|t_j|`, and `mu_n` the mass target (mu times the instance size). Vertex
/// ties are broken towards the lowest term index.
pub fn solve_neighbor_qp(
    loss_i: &QuadLoss,
    w_hat: &[DVector<f64>],
    sizes: &[f64],
    mu_n: f64,
    cfg: &SolverConfig,
) -> Result<NeighborSolution> {
    let m = w_hat.len();
    assert_eq!(sizes.len(), m);
    assert!(m > 0);
    if mu_n <= 0.0 {
        return Err(Error::Parameter("mu_n must be positive".into()));
    }
    let caps: Vec<f64> = sizes.iter().map(|s| 2.0 * s / mu_n).collect();
    let capacity: f64 = caps.iter().sum();
    if capacity < 1.0 - 1e-9 {
        return Err(Error::InfeasibleNeighborhood { capacity });
    }
    let d = loss_i.dim();
    // Forced unique point: the box exactly fills the simplex.
    if capacity <= 1.0 + 1e-12 {
        return Ok(mixture_solution(loss_i, w_hat, caps.clone(), d));
    }

    // Objective in mixing coordinates: g(a) = a00 + 2 q'a + a' Q a with
    // Q = W'(Ayy + kappa/2 I) W and q = W' a0.
    let mut w = DMatrix::zeros(d, m);
    for (j, col) in w_hat.iter().enumerate() {
        w.set_column(j, col);
    }
    let mut ayy = loss_i.ayy();
    for i in 0..d {
        ayy[(i, i)] += 0.5 * loss_i.kappa();
    }
    let q_mat = w.transpose() * ayy * &w;
    let q_vec = w.transpose() * loss_i.a0();
    let grad = |a: &DVector<f64>| -> DVector<f64> { (&q_mat * a + &q_vec) * 2.0 };
    let value = |a: &DVector<f64>| -> f64 { loss_i.a00() + 2.0 * q_vec.dot(a) + (&q_mat * a).dot(a) };

    // Lipschitz constant of the gradient: 2 lambda_max(Q), via power iteration.
    let mut v = DVector::from_element(m, 1.0 / (m as f64).sqrt());
    let mut lam = 0.0;
    for _ in 0..60 {
        let next = &q_mat * &v;
        let n = next.norm();
        if n <= 1e-300 {
            break;
        }
        lam = n;
        v = next / n;
    }
    let l = (2.0 * lam * 1.01).max(1e-12);

    // FISTA with restart on objective increase.
    let proj = |p: &DVector<f64>| -> DVector<f64> {
        DVector::from_vec(project_capped_simplex(p.as_slice(), &caps))
    };
    let mut a = proj(&DVector::from_element(m, 1.0 / m as f64));
    let mut momentum = a.clone();
    let mut t = 1.0f64;
    let mut f_prev = value(&a);
    let gtol = cfg.tol.min(1e-8);
    for _ in 0..cfg.max_iter.max(1000) {
        let g = grad(&momentum);
        let a_next = proj(&(&momentum - &g / l));
        let f_next = value(&a_next);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        if f_next > f_prev {
            // Restart momentum from the last accepted point.
            momentum = a.clone();
            t = 1.0;
            f_prev = value(&a);
            continue;
        }
        let step = &a_next - &a;
        momentum = &a_next + &step * ((t - 1.0) / t_next);
        let done = step.norm() <= gtol * (1.0 + a_next.norm());
        a = a_next;
        t = t_next;
        f_prev = f_next;
        if done {
            break;
        }
    }

    // Vertex snap: if a single feasible vertex matches the optimum, return it
    // exactly, preferring the lowest index.
    let mut best_vertex: Option<(usize, f64)> = None;
    for (j, cap) in caps.iter().enumerate() {
        if *cap >= 1.0 {
            let fj = loss_i.eval(&w_hat[j]);
            if best_vertex.is_none_or(|(_, fb)| fj < fb - 1e-12 * (1.0 + fb.abs())) {
                best_vertex = Some((j, fj));
            }
        }
    }
    let f_a = value(&a);
    if let Some((j, fj)) = best_vertex {
        if fj <= f_a + 1e-9 * (1.0 + f_a.abs()) {
            let mut av = vec![0.0; m];
            av[j] = 1.0;
            return Ok(mixture_solution(loss_i, w_hat, av, d));
        }
    }
    Ok(mixture_solution(loss_i, w_hat, a.as_slice().to_vec(), d))
}

fn mixture_solution(loss_i: &QuadLoss, w_hat: &[DVector<f64>], a: Vec<f64>, d: usize) -> NeighborSolution {
    let mut w_tilde = DVector::zeros(d);
    for (j, coeff) in a.iter().enumerate() {
        if *coeff != 0.0 {
            w_tilde += &w_hat[j] * *coeff;
        }
    }
    let loss = loss_i.eval(&w_tilde);
    NeighborSolution { a, w_tilde, loss }
}
