//! Per-term quadratic loss matrices.
//!
//! Each term's mean squared loss is folded into a (d+1) x (d+1) matrix A so
//! that f(w) = [1, w] A [1, w]^T (+ an optional ridge term); after this
//! precomputation nothing downstream touches raw points.

use nalgebra::{DMatrix, DVector};

use crate::terms::TermData;

/// Quadratic loss of one term: `f(w) = [1,w] A [1,w]^T + (kappa/2) ||w||^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadLoss {
    a: DMatrix<f64>,
    weight: f64,
    kappa: f64,
}

impl QuadLoss {
    /// Builds `A = (1/|t|) [[z'z, -z'Y], [-Y'z, Y'Y]]` from a term's points.
    pub fn from_term_data(td: &TermData, kappa: f64) -> Self {
        let m = td.z.len();
        assert!(m >= 1, "term must have at least one member point");
        assert!(kappa >= 0.0, "kappa must be non-negative");
        let d = td.y.ncols();
        let inv = 1.0 / m as f64;
        let mut a = DMatrix::zeros(d + 1, d + 1);
        a[(0, 0)] = td.z.dot(&td.z) * inv;
        let ytz = td.y.transpose() * &td.z;
        for i in 0..d {
            a[(0, i + 1)] = -ytz[i] * inv;
            a[(i + 1, 0)] = -ytz[i] * inv;
        }
        let yty = td.y.transpose() * &td.y;
        for i in 0..d {
            for j in 0..d {
                a[(i + 1, j + 1)] = yty[(i, j)] * inv;
            }
        }
        Self { a, weight: m as f64, kappa }
    }

    /// Builds a loss directly from a prepared matrix; used by tests and by
    /// callers that already hold the quadratic form.
    pub fn from_matrix(a: DMatrix<f64>, weight: f64, kappa: f64) -> Self {
        assert_eq!(a.nrows(), a.ncols());
        Self { a, weight, kappa }
    }

    /// Feature dimension d.
    pub fn dim(&self) -> usize {
        self.a.nrows() - 1
    }

    /// Term weight |t|.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Constant block z'z / |t|.
    pub fn a00(&self) -> f64 {
        self.a[(0, 0)]
    }

    /// Linear block -Y'z / |t| as a column vector.
    pub fn a0(&self) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| self.a[(i + 1, 0)])
    }

    /// Quadratic block Y'Y / |t|.
    pub fn ayy(&self) -> DMatrix<f64> {
        self.a.view((1, 1), (self.dim(), self.dim())).into()
    }

    /// Mean squared loss (plus ridge term) at `w`.
    pub fn eval(&self, w: &DVector<f64>) -> f64 {
        assert_eq!(w.len(), self.dim(), "dimension mismatch in loss evaluation");
        let d = self.dim();
        let mut quad = self.a[(0, 0)];
        for i in 0..d {
            quad += 2.0 * self.a[(i + 1, 0)] * w[i];
            for j in 0..d {
                quad += w[i] * self.a[(i + 1, j + 1)] * w[j];
            }
        }
        quad + 0.5 * self.kappa * w.norm_squared()
    }

    /// Gradient `2 (Y'Y w - Y'z) / |t| + kappa w`.
    pub fn gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        assert_eq!(w.len(), self.dim(), "dimension mismatch in loss gradient");
        let d = self.dim();
        DVector::from_fn(d, |i, _| {
            let mut g = 2.0 * self.a[(i + 1, 0)];
            for j in 0..d {
                g += 2.0 * self.a[(i + 1, j + 1)] * w[j];
            }
            g + self.kappa * w[i]
        })
    }

    /// Unconstrained minimizer of the (ridge-regularized) loss, if the
    /// normal system is solvable.
    pub fn minimizer(&self) -> Option<DVector<f64>> {
        let d = self.dim();
        let mut h = self.ayy();
        for i in 0..d {
            h[(i, i)] += 0.5 * self.kappa;
        }
        h.lu().solve(&(-self.a0()))
    }
}

/// Weighted total `sum_i c_i |t_i| f_i(w_i)`.
pub fn weighted_total(losses: &[QuadLoss], c: &[f64], w_list: &[DVector<f64>]) -> f64 {
    assert_eq!(losses.len(), c.len());
    assert_eq!(losses.len(), w_list.len());
    losses
        .iter()
        .zip(c)
        .zip(w_list)
        .map(|((l, &ci), w)| ci * l.weight() * l.eval(w))
        .sum()
}
