//! Randomized self-checks run by `protoset validate`.

use rand::Rng;
use serde::Serialize;

use crate::coreset::{self, CostMode};
use crate::error::Result;
use crate::matching::{brute_force_match, match_cost, verify_match_triangle, Metric};
use crate::pattern::{Instance, Pattern};
use crate::prototype;
use crate::seed::substream;

use super::data::gaussian_instance;

/// Unweighted pattern with coordinates drawn from `U[0, 1)`.
pub fn random_pattern<R: Rng + ?Sized>(k: usize, d: usize, rng: &mut R) -> Result<Pattern> {
    let coords = (0..k * d).map(|_| rng.random::<f64>()).collect();
    Pattern::from_flat(k, d, coords, None)
}

/// Weighted pattern whose `total` units of mass are dropped on uniformly
/// chosen points.
pub fn random_weighted_pattern<R: Rng + ?Sized>(k: usize, d: usize, total: u64, rng: &mut R) -> Result<Pattern> {
    let coords = (0..k * d).map(|_| rng.random::<f64>()).collect();
    let mut weights = vec![0u64; k];
    for _ in 0..total {
        weights[rng.random_range(0..k)] += 1;
    }
    Pattern::from_flat(k, d, coords, Some(weights))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub checked: usize,
    pub violations: usize,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Hungarian against the brute-force permutation minimum (k <= 7, d <= 5).
pub fn oracle_suite(pairs: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = substream(seed, "oracle", 0);
    let mut violations = 0;
    for _ in 0..pairs {
        let k = rng.random_range(1..=7);
        let d = rng.random_range(1..=5);
        let a = random_pattern(k, d, &mut rng)?;
        let b = random_pattern(k, d, &mut rng)?;
        for metric in [Metric::SquaredL2, Metric::L1] {
            let fast = match_cost(&a, &b, metric)?.cost;
            let slow = brute_force_match(&a, &b, metric)?.cost;
            if (fast - slow).abs() > 1e-9 * slow.abs().max(f64::MIN_POSITIVE) {
                violations += 1;
            }
        }
    }
    Ok(SuiteReport { name: "oracle", checked: 2 * pairs, violations })
}

/// Triangle-type inequalities on random triples: sq for several eps and l1
/// on unweighted triples, emd1 and emd2 on weighted ones (k <= 4, W <= 6).
pub fn inequality_suite(triples: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = substream(seed, "inequalities", 0);
    let mut checked = 0;
    let mut violations = 0;
    for _ in 0..triples {
        let k = rng.random_range(1..=6);
        let d = rng.random_range(1..=4);
        let [a, b, c] = [(); 3].map(|_| random_pattern(k, d, &mut rng));
        let (a, b, c) = (a?, b?, c?);
        for eps in [0.1, 0.5, 1.0] {
            checked += 1;
            if !verify_match_triangle(&a, &b, &c, eps, Metric::SquaredL2)? {
                violations += 1;
            }
        }
        checked += 1;
        if !verify_match_triangle(&a, &b, &c, 1.0, Metric::L1)? {
            violations += 1;
        }

        let k = rng.random_range(1..=4);
        let w = rng.random_range(1..=6);
        let [a, b, c] = [(); 3].map(|_| random_weighted_pattern(k, d, w, &mut rng));
        let (a, b, c) = (a?, b?, c?);
        for (metric, eps) in [(Metric::Emd1, 1.0), (Metric::Emd2, 0.5)] {
            checked += 1;
            if !verify_match_triangle(&a, &b, &c, eps, metric)? {
                violations += 1;
            }
        }
    }
    Ok(SuiteReport { name: "inequalities", checked, violations })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorReport {
    pub draws: usize,
    pub exact: f64,
    pub mean: f64,
    pub std_error: f64,
}

impl EstimatorReport {
    /// Mean within 3 standard errors and within 1% of the exact objective.
    pub fn passed(&self) -> bool {
        let gap = (self.mean - self.exact).abs();
        gap <= 3.0 * self.std_error && gap <= 0.01 * self.exact
    }
}

/// Mean of `draws` single-pattern weighted estimates of the objective at a
/// fixed prototype, on a fixed Gaussian instance (n = 50, k = 5, d = 4).
pub fn estimator_suite(draws: usize, seed: u64) -> Result<EstimatorReport> {
    let metric = Metric::SquaredL2;
    let inst: Instance = gaussian_instance(50, 5, 4, 3.0, 1.0, &mut substream(seed, "estimator-data", 0))?;
    let q = random_pattern(5, 4, &mut substream(seed, "estimator-q", 0))?;
    let profile = coreset::sensitivities(&inst, 0, coreset::DEFAULT_ALPHA, metric, CostMode::Exact)?;
    let exact = prototype::objective(&inst, &q, metric)?;
    let costs = prototype::pattern_costs(&inst, &q, metric)?;
    let mut rng = substream(seed, "estimator-draws", 0);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..draws {
        let cs = coreset::sample_coreset(&profile, 1, &mut rng)?;
        let e = cs.entries[0];
        let est = e.weight * costs[e.index];
        sum += est;
        sum_sq += est * est;
    }
    let m = draws as f64;
    let mean = sum / m;
    let var = (sum_sq / m - mean * mean).max(0.0) * m / (m - 1.0).max(1.0);
    Ok(EstimatorReport { draws, exact, mean, std_error: (var / m).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        assert!(oracle_suite(20, 1).unwrap().passed());
        assert!(inequality_suite(50, 1).unwrap().passed());
        let est = estimator_suite(2000, 1).unwrap();
        assert!((est.mean - est.exact).abs() <= 4.0 * est.std_error, "{est:?}");
    }

    #[test]
    fn weighted_generator_keeps_total() {
        let mut rng = substream(0, "t", 0);
        let p = random_weighted_pattern(4, 2, 6, &mut rng).unwrap();
        assert_eq!(p.total_weight(), Some(6));
    }
}
