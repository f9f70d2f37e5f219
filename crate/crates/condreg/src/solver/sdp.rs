//! Splitting solver for the trace-regularized soft-regression problem
//!
//! ```text
//! minimize    sum_i c_i |t_i| f_i(w_i) + lambda tr(Y)
//! subject to  (w_i - origin)(w_i - origin)' <= Y   (PSD order)
//!             ||w_i - origin|| <= radius
//! ```
//!
//! The PSD coupling is handled by consensus ADMM over the (d+1) x (d+1)
//! blocks [[Y, v_i], [v_i', 1]] with v_i = w_i - origin: the (v, Y) update is
//! an exact per-term trust-region solve plus a closed-form trace shrink, and
//! the dual blocks are projected onto the PSD cone. Residual balancing keeps
//! the penalty in scale across problem magnitudes.
//!
//! The inner loop runs on flat preallocated buffers; these solves sit inside
//! a triple-nested pipeline and allocation churn dominates otherwise.

use nalgebra::{DMatrix, DVector};

use super::SolverConfig;
use crate::error::{Error, Result};
use crate::loss::QuadLoss;

/// Converged solution of the soft-regression problem.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub w_list: Vec<DVector<f64>>,
    pub y: DMatrix<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix stored row-major
/// in `a` (n x n). On return the diagonal of `a` holds the eigenvalues and
/// the columns of `v` the eigenvectors.
fn jacobi_eig(a: &mut [f64], v: &mut [f64], n: usize) {
    v.fill(0.0);
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
    for _ in 0..40 {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q] * a[p * n + q])
            .sum();
        if off <= 1e-28 * scale {
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
}

struct TermCache {
    /// Eigenvectors of the term's quadratic block Ayy, column-major flat.
    evecs: Vec<f64>,
    evals: Vec<f64>,
    /// Gradient of f at the origin.
    grad0: Vec<f64>,
    /// f at the origin.
    f0: f64,
    weight: f64,
    kappa: f64,
}

impl TermCache {
    /// g(v) = f(origin + len * v) through the cached eigenbasis; `v` is in
    /// solver coordinates scaled down by `len`.
    fn eval_shifted(&self, v: &[f64], d: usize, len: f64) -> f64 {
        let mut quad = 0.0;
        for k in 0..d {
            let mut coord = 0.0;
            for r in 0..d {
                coord += self.evecs[r * d + k] * v[r];
            }
            coord *= len;
            quad += (self.evals[k] + 0.5 * self.kappa) * coord * coord;
        }
        let lin: f64 = self.grad0.iter().zip(v).map(|(g, x)| g * x * len).sum();
        self.f0 + lin + quad
    }
}

/// Reusable solver instance; repeated `solve` calls warm-start from the
/// previous solution, which pays off inside the reweighting loop.
pub struct SoftSdp {
    cache: Vec<TermCache>,
    origin: Vec<f64>,
    radius: f64,
    d: usize,
    cfg: SolverConfig,
    // ADMM state kept across solves; all row-major flat buffers.
    v: Vec<f64>,       // m * d
    y: Vec<f64>,       // d * d
    z: Vec<f64>,       // m * (d+1)^2
    u: Vec<f64>,       // m * (d+1)^2
    rho: f64,
    last_c: Option<Vec<f64>>,
    /// Length unit of the solver coordinates: w = origin + len_scale * v.
    len_scale: f64,
    // Scratch.
    s_block: Vec<f64>, // (d+1)^2
    s_eig: Vec<f64>,   // (d+1)^2
    s_eigv: Vec<f64>,  // (d+1)^2
    s_proj: Vec<f64>,  // (d+1)^2
    s_b: Vec<f64>,     // d
    s_bt: Vec<f64>,    // d
    s_h: Vec<f64>,     // d
}

impl SoftSdp {
    pub fn new(losses: &[QuadLoss], origin: DVector<f64>, radius: f64, cfg: SolverConfig) -> Result<Self> {
        if losses.is_empty() {
            return Err(Error::Parameter("soft regression needs at least one term".into()));
        }
        if !(radius > 0.0) {
            return Err(Error::Parameter("radius must be positive".into()));
        }
        let d = losses[0].dim();
        if origin.len() != d || losses.iter().any(|l| l.dim() != d) {
            return Err(Error::Parameter("inconsistent dimensions across terms".into()));
        }
        let cache = losses
            .iter()
            .map(|l| {
                let eig = l.ayy().symmetric_eigen();
                let mut evecs = vec![0.0; d * d];
                for r in 0..d {
                    for k in 0..d {
                        evecs[r * d + k] = eig.eigenvectors[(r, k)];
                    }
                }
                TermCache {
                    evecs,
                    evals: eig.eigenvalues.iter().copied().collect(),
                    grad0: l.gradient(&origin).iter().copied().collect(),
                    f0: l.eval(&origin),
                    weight: l.weight(),
                    kappa: l.kappa(),
                }
            })
            .collect();
        let m = losses.len();
        let b = d + 1;
        let mut solver = Self {
            cache,
            origin: origin.iter().copied().collect(),
            radius,
            d,
            cfg,
            v: vec![0.0; m * d],
            y: vec![0.0; d * d],
            z: vec![0.0; m * b * b],
            u: vec![0.0; m * b * b],
            rho: 1.0,
            last_c: None,
            len_scale: 1.0,
            s_block: vec![0.0; b * b],
            s_eig: vec![0.0; b * b],
            s_eigv: vec![0.0; b * b],
            s_proj: vec![0.0; b * b],
            s_b: vec![0.0; d],
            s_bt: vec![0.0; d],
            s_h: vec![0.0; d],
        };
        solver.init_state();
        Ok(solver)
    }

    /// Starts every term at its ball-clipped unconstrained minimizer with an
    /// enclosing Y, and picks the coordinate unit from the spread of those
    /// minimizers so the consensus blocks stay comparable to their pinned
    /// unit corner. Cuts the travel distance of the slow shared ellipsoid
    /// mode and keeps the splitting geometry well conditioned.
    fn init_state(&mut self) {
        let d = self.d;
        let b = d + 1;
        let m = self.cache.len();
        let mut max_norm: f64 = 0.0;
        for i in 0..m {
            let t = &self.cache[i];
            let curvature: f64 =
                t.evals.iter().map(|e| 2.0 * e + t.kappa).sum::<f64>() / d as f64;
            let tiny = 1e-9 * (1.0 + curvature.abs());
            trs_solve(
                t,
                1.0,
                tiny,
                self.radius,
                1.0,
                d,
                &t.grad0,
                &mut self.s_bt,
                &mut self.s_h,
                &mut self.v[i * d..(i + 1) * d],
            );
            let norm: f64 =
                self.v[i * d..(i + 1) * d].iter().map(|x| x * x).sum::<f64>().sqrt();
            max_norm = max_norm.max(norm);
        }
        let len = if max_norm > self.radius * 1e-9 { max_norm } else { self.radius };
        self.len_scale = len;
        for x in &mut self.v {
            *x /= len;
        }
        // Start Y below the needed dominator: consensus grows it quickly,
        // while shrinking an oversized ellipsoid is slow at small lambda.
        self.y.fill(0.0);
        for i in 0..m {
            let vi = &self.v[i * d..(i + 1) * d];
            for r in 0..d {
                for s in 0..d {
                    self.y[r * d + s] += vi[r] * vi[s] / m as f64;
                }
            }
        }
        for i in 0..m {
            Self::fill_block(&self.y, &self.v[i * d..(i + 1) * d], d, &mut self.s_block);
            self.z[i * b * b..(i + 1) * b * b].copy_from_slice(&self.s_block);
        }
        // Penalty in the scale of the per-term quadratic curvature.
        let total_weight: f64 = self.cache.iter().map(|t| t.weight).sum::<f64>().max(1.0);
        let len_sq = len * len;
        let mean_curv: f64 = self
            .cache
            .iter()
            .map(|t| {
                let c: f64 =
                    t.evals.iter().map(|e| (2.0 * e + t.kappa) * len_sq).sum::<f64>() / d as f64;
                (t.weight / total_weight) * c
            })
            .sum();
        self.rho = mean_curv.clamp(1e-6, 1e6);
    }

    /// Writes the consensus block [[Y, v_i], [v_i', 1]] into `out`.
    fn fill_block(y: &[f64], vi: &[f64], d: usize, out: &mut [f64]) {
        let b = d + 1;
        for r in 0..d {
            for s in 0..d {
                out[r * b + s] = y[r * d + s];
            }
            out[r * b + d] = vi[r];
            out[d * b + r] = vi[r];
        }
        out[d * b + d] = 1.0;
    }

    /// Runs ADMM for the given weights; `c[i]` in [0, 1].
    pub fn solve(&mut self, c: &[f64], lambda: f64) -> Result<SdpSolution> {
        let m = self.cache.len();
        assert_eq!(c.len(), m);
        if !(lambda > 0.0) {
            return Err(Error::Parameter("lambda must be positive".into()));
        }
        if c.iter().any(|&ci| !(0.0..=1.0).contains(&ci)) {
            return Err(Error::Parameter("weights c must lie in [0, 1]".into()));
        }
        // Warm-start only across solves with identical weights; stale duals
        // from a different weighting strand the shared ellipsoid.
        if self.last_c.as_deref() != Some(c) {
            if self.last_c.is_some() {
                self.u.fill(0.0);
                self.init_state();
            }
            self.last_c = Some(c.to_vec());
        }
        let d = self.d;
        let b = d + 1;
        let scale = c
            .iter()
            .zip(&self.cache)
            .map(|(&ci, t)| ci * t.weight)
            .sum::<f64>()
            .max(1.0);
        let wt: Vec<f64> = c.iter().zip(&self.cache).map(|(&ci, t)| ci * t.weight / scale).collect();
        let len = self.len_scale;
        let lam = lambda * len * len / scale;
        let ball = self.radius / len;

        let mut kkt = f64::INFINITY;
        let mut iterations = 0;
        for iter in 0..self.cfg.max_iter {
            iterations = iter + 1;
            // v-update: exact trust-region solve per term. The linear term is
            // b_i = wt_i grad0_i - 2 rho q_i with q_i the off-diagonal block
            // of Z_i - U_i.
            for i in 0..m {
                let zi = &self.z[i * b * b..(i + 1) * b * b];
                let ui = &self.u[i * b * b..(i + 1) * b * b];
                let t = &self.cache[i];
                for r in 0..d {
                    let q = 0.5 * ((zi[r * b + d] - ui[r * b + d]) + (zi[d * b + r] - ui[d * b + r]));
                    self.s_b[r] = wt[i] * t.grad0[r] * len - 2.0 * self.rho * q;
                }
                trs_solve(
                    t,
                    wt[i],
                    self.rho,
                    ball,
                    len * len,
                    d,
                    &self.s_b,
                    &mut self.s_bt,
                    &mut self.s_h,
                    &mut self.v[i * d..(i + 1) * d],
                );
            }
            // Y-update: mean of the consensus blocks minus the trace shrink.
            self.y.fill(0.0);
            for i in 0..m {
                let zi = &self.z[i * b * b..(i + 1) * b * b];
                let ui = &self.u[i * b * b..(i + 1) * b * b];
                for r in 0..d {
                    for s in 0..d {
                        self.y[r * d + s] += zi[r * b + s] - ui[r * b + s];
                    }
                }
            }
            let inv_m = 1.0 / m as f64;
            for r in 0..d {
                for s in 0..=r {
                    let sym = 0.5 * (self.y[r * d + s] + self.y[s * d + r]) * inv_m;
                    self.y[r * d + s] = sym;
                    self.y[s * d + r] = sym;
                }
                self.y[r * d + r] -= lam / (self.rho * m as f64);
            }

            // Z-update: PSD projection of X + U; U-update: add the residual.
            let mut primal_sq = 0.0;
            let mut dual_sq = 0.0;
            let mut x_sq = 0.0;
            let mut z_sq = 0.0;
            let mut u_sq = 0.0;
            for i in 0..m {
                Self::fill_block(&self.y, &self.v[i * d..(i + 1) * d], d, &mut self.s_block);
                let zi = &mut self.z[i * b * b..(i + 1) * b * b];
                let ui = &mut self.u[i * b * b..(i + 1) * b * b];
                // target = X + U, symmetrized.
                for r in 0..b {
                    for s2 in 0..=r {
                        let t = 0.5
                            * (self.s_block[r * b + s2] + ui[r * b + s2] + self.s_block[s2 * b + r]
                                + ui[s2 * b + r]);
                        self.s_eig[r * b + s2] = t;
                        self.s_eig[s2 * b + r] = t;
                    }
                }
                jacobi_eig(&mut self.s_eig, &mut self.s_eigv, b);
                // znew = V max(diag, 0) V'.
                self.s_proj.fill(0.0);
                for k in 0..b {
                    let lamk = self.s_eig[k * b + k];
                    if lamk > 0.0 {
                        for r in 0..b {
                            let vr = self.s_eigv[r * b + k] * lamk;
                            for s2 in 0..b {
                                self.s_proj[r * b + s2] += vr * self.s_eigv[s2 * b + k];
                            }
                        }
                    }
                }
                for idx in 0..b * b {
                    let zn = self.s_proj[idx];
                    let resid = self.s_block[idx] - zn;
                    primal_sq += resid * resid;
                    dual_sq += (zn - zi[idx]) * (zn - zi[idx]);
                    ui[idx] += resid;
                    u_sq += ui[idx] * ui[idx];
                    z_sq += zn * zn;
                    x_sq += self.s_block[idx] * self.s_block[idx];
                    zi[idx] = zn;
                }
            }
            let primal = primal_sq.sqrt();
            let dual = self.rho * dual_sq.sqrt();
            let rel_pri = primal / x_sq.max(z_sq).sqrt().max(1.0);
            let rel_dual = dual / (self.rho * u_sq.sqrt()).max(1.0);
            kkt = rel_pri.max(rel_dual);
            if iter % 2000 == 0 && std::env::var_os("CONDREG_SDP_DEBUG").is_some() {
                let tr: f64 = (0..d).map(|r| self.y[r * d + r]).sum();
                eprintln!(
                    "iter {iter}: rel_pri={rel_pri:.3e} rel_dual={rel_dual:.3e} rho={:.3e} tr={tr:.4}",
                    self.rho
                );
            }
            if kkt <= self.cfg.tol {
                break;
            }
            // Residual balancing on the relative measures. Frequent while far
            // from the target; near it only a rare rescue step, since every
            // change re-excites the tail. The proportional factor lands close
            // to balance instead of ping-ponging.
            let far = kkt > 100.0 * self.cfg.tol;
            if (iter % 10 == 9 && far) || (iter % 2000 == 1999 && !far) {
                let ratio = (rel_pri / rel_dual.max(1e-300)).sqrt();
                if !(0.33..=3.0).contains(&ratio) {
                    let factor = ratio.clamp(0.2, 5.0);
                    let new_rho = (self.rho * factor).clamp(1e-6, 1e6);
                    let applied = new_rho / self.rho;
                    if applied != 1.0 {
                        self.rho = new_rho;
                        for ui in &mut self.u {
                            *ui /= applied;
                        }
                    }
                }
            }
        }

        // Polish: lift Y so every Schur complement is exactly PSD.
        let mut violation = 0.0f64;
        for i in 0..m {
            let vi = &self.v[i * self.d..(i + 1) * self.d];
            for r in 0..d {
                for s in 0..d {
                    self.s_proj[r * d + s] = self.y[r * d + s] - vi[r] * vi[s];
                }
            }
            jacobi_eig(&mut self.s_proj[..d * d], &mut self.s_eigv[..d * d], d);
            let min_eig =
                (0..d).map(|k| self.s_proj[k * d + k]).fold(f64::INFINITY, f64::min);
            violation = violation.max(-min_eig);
        }
        let ll = len * len;
        let mut y = DMatrix::from_fn(d, d, |r, s| ll * self.y[r * d + s]);
        if violation > 0.0 {
            let lift = ll * (violation * (1.0 + 1e-9) + 1e-15);
            for r in 0..d {
                y[(r, r)] += lift;
            }
        }

        let w_list: Vec<DVector<f64>> = (0..m)
            .map(|i| DVector::from_fn(d, |r, _| len * self.v[i * d + r] + self.origin[r]))
            .collect();
        let objective = (0..m)
            .map(|i| {
                c[i] * self.cache[i].weight
                    * self.cache[i].eval_shifted(&self.v[i * d..(i + 1) * d], d, len)
            })
            .sum::<f64>()
            + lambda * y.trace();
        let solution = SdpSolution { w_list, y, objective, kkt_residual: kkt, iterations };
        if kkt > self.cfg.tol {
            return Err(Error::SolverStalled {
                iterations,
                residual: kkt,
                partial: Box::new(solution),
            });
        }
        Ok(solution)
    }
}

/// One-shot solve of the soft-regression problem.
pub fn solve_soft_sdp(
    losses: &[QuadLoss],
    c: &[f64],
    lambda: f64,
    origin: &DVector<f64>,
    radius: f64,
    cfg: &SolverConfig,
) -> Result<SdpSolution> {
    SoftSdp::new(losses, origin.clone(), radius, *cfg)?.solve(c, lambda)
}

/// Exact minimizer of `wt g(v) + rho ||v - q||^2` over the ball `||v|| <= R`
/// through the term's cached eigenbasis; the linear coefficient arrives as
/// `lin = wt grad0 * len - 2 rho q` and `len_sq` rescales the quadratic to
/// solver coordinates. Writes the solution into `out`.
#[allow(clippy::too_many_arguments)]
fn trs_solve(
    cache: &TermCache,
    wt: f64,
    rho: f64,
    radius: f64,
    len_sq: f64,
    d: usize,
    lin: &[f64],
    bt: &mut [f64],
    h: &mut [f64],
    out: &mut [f64],
) {
    // bt = V' lin; h = spectrum of the strictly positive definite Hessian.
    for k in 0..d {
        let mut acc = 0.0;
        for r in 0..d {
            acc += cache.evecs[r * d + k] * lin[r];
        }
        bt[k] = acc;
        h[k] = wt * (2.0 * cache.evals[k] + cache.kappa) * len_sq + 2.0 * rho;
    }
    let norm_sq_at = |sigma: f64, bt: &[f64], h: &[f64]| -> f64 {
        bt.iter().zip(h).map(|(bi, hi)| (bi / (hi + sigma)).powi(2)).sum::<f64>()
    };
    let mut sigma = 0.0;
    if norm_sq_at(0.0, bt, h) > radius * radius {
        // Newton on 1/||v(sigma)|| - 1/R, safeguarded by bisection.
        let bt_norm: f64 = bt.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut lo = 0.0;
        let mut hi = bt_norm / radius;
        for _ in 0..100 {
            let nv = norm_sq_at(sigma, bt, h).sqrt();
            if (nv - radius).abs() <= 1e-13 * radius.max(1.0) {
                break;
            }
            if nv > radius {
                lo = sigma;
            } else {
                hi = sigma;
            }
            let dn: f64 = bt
                .iter()
                .zip(h.iter())
                .map(|(bi, hi2)| bi * bi / (hi2 + sigma).powi(3))
                .sum::<f64>();
            let psi = 1.0 / nv - 1.0 / radius;
            let dpsi = dn / nv.powi(3);
            let mut next = sigma - psi / dpsi;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - sigma).abs() <= 1e-16 * (1.0 + sigma) {
                break;
            }
            sigma = next;
        }
    }
    // out = V diag(-1/(h + sigma)) bt.
    for r in 0..d {
        let mut acc = 0.0;
        for k in 0..d {
            acc += cache.evecs[r * d + k] * (-bt[k] / (h[k] + sigma));
        }
        out[r] = acc;
    }
}
