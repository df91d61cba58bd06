//! Weighted Lloyd's k-means with k-means++ seeding.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matching::squared_l2;

pub const MAX_ITERS: usize = 50;
pub const REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    /// Row-major `k x d`.
    pub centers: Vec<f64>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    pub iters: usize,
}

impl KMeans {
    pub fn center(&self, j: usize, d: usize) -> &[f64] {
        &self.centers[j * d..(j + 1) * d]
    }
}

fn nearest(x: &[f64], centers: &[f64], d: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.chunks_exact(d).enumerate() {
        let dist = squared_l2(x, c);
        if dist < best.1 {
            best = (j, dist);
        }
    }
    best
}

fn sample_proportional<R: Rng + ?Sized>(mass: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = mass.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let mut target = rng.random_range(0.0..total);
    for (i, &m) in mass.iter().enumerate() {
        if m > 0.0 {
            if target < m {
                return Some(i);
            }
            target -= m;
        }
    }
    mass.iter().rposition(|&m| m > 0.0)
}

/// Clusters `points` (row-major, dimension `d`) into `k` groups.
///
/// `weights` defaults to 1 per point. Clusters that end up empty keep their
/// previous center.
pub fn kmeans<R: Rng + ?Sized>(
    points: &[f64],
    d: usize,
    weights: Option<&[f64]>,
    k: usize,
    rng: &mut R,
) -> Result<KMeans> {
    if d == 0 || points.is_empty() || !points.len().is_multiple_of(d) {
        return Err(Error::Empty("k-means needs at least one point"));
    }
    if k == 0 {
        return Err(Error::invalid("k", "must be at least 1"));
    }
    let n = points.len() / d;
    let unit = vec![1.0; n];
    let w = weights.unwrap_or(&unit);
    if w.len() != n {
        return Err(Error::SizeMismatch { expected: n, got: w.len() });
    }
    let point = |i: usize| &points[i * d..(i + 1) * d];

    // k-means++ seeding, weighted by point mass.
    let first = sample_proportional(w, rng).unwrap_or(0);
    let mut centers: Vec<f64> = point(first).to_vec();
    let mut d2: Vec<f64> = (0..n).map(|i| squared_l2(point(i), point(first))).collect();
    while centers.len() < k * d {
        let mass: Vec<f64> = d2.iter().zip(w).map(|(a, b)| a * b).collect();
        let pick = sample_proportional(&mass, rng).unwrap_or_else(|| rng.random_range(0..n));
        centers.extend_from_slice(point(pick));
        let c = &centers[centers.len() - d..];
        for (i, v) in d2.iter_mut().enumerate() {
            *v = v.min(squared_l2(point(i), c));
        }
    }

    let mut assignments = vec![0usize; n];
    let mut inertia = f64::INFINITY;
    let mut iters = 0;
    for it in 0..MAX_ITERS {
        iters = it + 1;
        let mut next_inertia = 0.0;
        for i in 0..n {
            let (j, dist) = nearest(point(i), &centers, d);
            assignments[i] = j;
            next_inertia += w[i] * dist;
        }

        // Running weighted means: a cluster of identical points lands exactly on them.
        let mut means = vec![0.0; k * d];
        let mut mass = vec![0.0; k];
        for i in 0..n {
            let j = assignments[i];
            if w[i] <= 0.0 {
                continue;
            }
            mass[j] += w[i];
            let step = w[i] / mass[j];
            for (m, x) in means[j * d..(j + 1) * d].iter_mut().zip(point(i)) {
                *m += step * (x - *m);
            }
        }
        for j in 0..k {
            if mass[j] > 0.0 {
                centers[j * d..(j + 1) * d].copy_from_slice(&means[j * d..(j + 1) * d]);
            }
        }

        let converged = inertia.is_finite() && (inertia - next_inertia) <= REL_TOL * inertia.max(f64::MIN_POSITIVE);
        inertia = next_inertia;
        if converged {
            break;
        }
    }

    // Final assignment against the final centers.
    let mut final_inertia = 0.0;
    for i in 0..n {
        let (j, dist) = nearest(point(i), &centers, d);
        assignments[i] = j;
        final_inertia += w[i] * dist;
    }
    let _ = inertia;
    Ok(KMeans { centers, assignments, inertia: final_inertia, iters })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn separates_two_blobs() {
        let pts = [0.0, 0.0, 0.1, 0.0, 0.0, 0.1, 10.0, 10.0, 10.1, 10.0, 10.0, 10.1];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let km = kmeans(&pts, 2, None, 2, &mut rng).unwrap();
        assert_eq!(km.assignments[0], km.assignments[1]);
        assert_eq!(km.assignments[0], km.assignments[2]);
        assert_eq!(km.assignments[3], km.assignments[4]);
        assert_ne!(km.assignments[0], km.assignments[3]);
        assert!(km.inertia < 0.1);
    }

    #[test]
    fn weighted_single_cluster_is_weighted_mean() {
        let pts = [0.0, 4.0];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let km = kmeans(&pts, 1, Some(&[3.0, 1.0]), 1, &mut rng).unwrap();
        assert_eq!(km.centers, vec![1.0]);
    }

    #[test]
    fn more_clusters_than_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let km = kmeans(&[1.0, 2.0], 1, None, 3, &mut rng).unwrap();
        assert_eq!(km.centers.len(), 3);
        assert_eq!(km.inertia, 0.0);
    }
}
