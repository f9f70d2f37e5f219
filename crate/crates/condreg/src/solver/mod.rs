//! Convex kernels: the joint soft-regression SDP and the per-term
//! neighborhood QP.

mod qp;
mod sdp;

pub use qp::{solve_neighbor_qp, NeighborSolution};
pub use sdp::{solve_soft_sdp, SdpSolution, SoftSdp};

/// Shared numeric controls for both kernels.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// Relative KKT-residual tolerance.
    pub tol: f64,
    /// Iteration cap per solve.
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 10_000 }
    }
}
