//! Randomized padded decomposition of a parameter point set: carve balls of
//! radius `k * tau` (one `k` per decomposition, uniform on `[2, rho]`) around
//! uniformly sampled points until nothing remains.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Cluster {
    /// Index of the sampled center point.
    pub center: usize,
    /// Carving radius `k * tau`.
    pub radius: f64,
    /// Member point indices, ascending.
    pub members: Vec<usize>,
}

/// A partition of the input points into ball-shaped clusters.
#[derive(Debug, Clone)]
pub struct Partition {
    pub clusters: Vec<Cluster>,
    /// The sampled radius multiplier `k`.
    pub k_multiplier: f64,
}

impl Partition {
    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }
}

/// Decomposes `points` with multiplier bound `rho` (> 2) and padding scale
/// `tau` (> 0). Deterministic given the seed.
pub fn padded_decomposition(
    points: &[DVector<f64>],
    rho: f64,
    tau: f64,
    seed: u64,
) -> Result<Partition> {
    if points.is_empty() {
        return Err(Error::Parameter("padded decomposition needs at least one point".into()));
    }
    if !(rho > 2.0) {
        return Err(Error::Parameter("rho must exceed 2".into()));
    }
    if !(tau > 0.0) {
        return Err(Error::Parameter("tau must be positive".into()));
    }
    let m = points.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(2.0..rho);
    let ball = k * tau;
    let mut remaining: Vec<bool> = vec![true; m];
    let mut left = m;
    let mut clusters = Vec::new();
    while left > 0 {
        let center = rng.random_range(0..m);
        let members: Vec<usize> = (0..m)
            .filter(|&j| remaining[j] && (&points[j] - &points[center]).norm() <= ball)
            .collect();
        if members.is_empty() {
            continue;
        }
        left -= members.len();
        for &j in &members {
            remaining[j] = false;
        }
        clusters.push(Cluster { center, radius: ball, members });
    }
    Ok(Partition { clusters, k_multiplier: k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn vecs(values: &[&[f64]]) -> Vec<DVector<f64>> {
        values.iter().map(|v| DVector::from_column_slice(v)).collect()
    }

    #[test]
    fn single_point_single_cluster() {
        let p = vecs(&[&[1.0, 2.0]]);
        let part = padded_decomposition(&p, 8.0, 1.0, 0).unwrap();
        assert_eq!(part.n_clusters(), 1);
        assert_eq!(part.clusters[0].members, vec![0]);
    }

    #[test]
    fn is_a_partition_with_bounded_clusters() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for seed in 0..50 {
            let m = rng.random_range(1..30);
            let points: Vec<DVector<f64>> =
                (0..m).map(|_| DVector::from_fn(3, |_, _| rng.random_range(-5.0..5.0))).collect();
            let part = padded_decomposition(&points, 10.0, 0.5, seed).unwrap();
            let mut seen = vec![false; m];
            for cl in &part.clusters {
                for &j in &cl.members {
                    assert!(!seen[j], "point {j} in two clusters");
                    seen[j] = true;
                    assert!((&points[j] - &points[cl.center]).norm() <= cl.radius + 1e-12);
                }
            }
            assert!(seen.iter().all(|&s| s), "not all points covered");
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let points = vecs(&[&[0.0], &[1.0], &[5.0], &[5.5]]);
        let a = padded_decomposition(&points, 6.0, 0.4, 42).unwrap();
        let b = padded_decomposition(&points, 6.0, 0.4, 42).unwrap();
        assert_eq!(a.k_multiplier, b.k_multiplier);
        assert_eq!(
            a.clusters.iter().map(|c| c.members.clone()).collect::<Vec<_>>(),
            b.clusters.iter().map(|c| c.members.clone()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn tau_diameter_set_lands_in_one_cluster() {
        // Every pairwise distance is at most tau, and k >= 2, so the first
        // carve grabs everything: single cluster with probability one.
        let mu = 0.25f64;
        let rho = 8.0 * (2.0 / mu).ln();
        let tau = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut single = 0;
        for seed in 0..200 {
            let points: Vec<DVector<f64>> = (0..12)
                .map(|_| {
                    let r = rng.random_range(0.0..tau / 2.0);
                    let a = rng.random_range(0.0..std::f64::consts::TAU);
                    DVector::from_column_slice(&[r * a.cos(), r * a.sin()])
                })
                .collect();
            let part = padded_decomposition(&points, rho, tau, seed).unwrap();
            if part.n_clusters() == 1 {
                single += 1;
            }
        }
        assert!(single >= 175, "single-cluster frequency {single}/200");
    }

    proptest::proptest! {
        #[test]
        fn partition_properties(
            coords in proptest::collection::vec(-10.0f64..10.0, 2..40),
            rho in 2.1f64..20.0,
            tau in 0.01f64..5.0,
            seed in 0u64..1000,
        ) {
            let points: Vec<DVector<f64>> =
                coords.iter().map(|&v| DVector::from_column_slice(&[v])).collect();
            let part = padded_decomposition(&points, rho, tau, seed).unwrap();
            let mut seen = vec![false; points.len()];
            for cl in &part.clusters {
                proptest::prop_assert!(cl.radius <= rho * tau);
                for &j in &cl.members {
                    proptest::prop_assert!(!seen[j]);
                    seen[j] = true;
                    proptest::prop_assert!(
                        (&points[j] - &points[cl.center]).norm() <= cl.radius + 1e-12
                    );
                }
            }
            proptest::prop_assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn far_groups_never_merge() {
        let rho = 8.0;
        let tau = 0.1;
        // Two groups separated by much more than rho * tau.
        let points = vecs(&[&[0.0], &[0.05], &[100.0], &[100.05]]);
        for seed in 0..200 {
            let part = padded_decomposition(&points, rho, tau, seed).unwrap();
            for cl in &part.clusters {
                let low = cl.members.iter().any(|&j| j < 2);
                let high = cl.members.iter().any(|&j| j >= 2);
                assert!(!(low && high), "groups merged at seed {seed}");
            }
        }
    }
}
