//! Matching-cost kernels between two k-point sets.
//!
//! Unweighted patterns are compared by the cheapest bijection between their
//! points ([`match_cost`], Hungarian). Weighted patterns with equal integer
//! total mass are compared by earth mover's distance ([`emd`], min-cost
//! flow). [`approx_match_cost`] gives a fast feasible upper bound for either.

mod emd;
pub mod hungarian;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::Pattern;

/// Largest `k` accepted by [`brute_force_match`].
pub const BRUTE_FORCE_MAX_K: usize = 8;

/// Relative slack used when comparing accumulated costs.
pub const REL_TOL: f64 = 1e-9;

/// Ground cost between matched points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Unweighted, `||a - b||^2`.
    #[serde(rename = "sq")]
    SquaredL2,
    /// Unweighted, `||a - b||_1`.
    L1,
    /// Weighted EMD with `||a - b||` ground.
    Emd1,
    /// Weighted EMD with `||a - b||^2` ground.
    Emd2,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::SquaredL2, Metric::L1, Metric::Emd1, Metric::Emd2];

    #[inline]
    pub fn ground(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::SquaredL2 | Metric::Emd2 => squared_l2(a, b),
            Metric::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            Metric::Emd1 => squared_l2(a, b).sqrt(),
        }
    }

    pub fn is_weighted(self) -> bool {
        matches!(self, Metric::Emd1 | Metric::Emd2)
    }

    /// Squared grounds only satisfy the relaxed (factor 2) triangle inequality.
    pub fn is_squared(self) -> bool {
        matches!(self, Metric::SquaredL2 | Metric::Emd2)
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::SquaredL2 => "sq",
            Metric::L1 => "l1",
            Metric::Emd1 => "emd1",
            Metric::Emd2 => "emd2",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sq" | "sql2" | "l2" => Ok(Metric::SquaredL2),
            "l1" => Ok(Metric::L1),
            "emd1" => Ok(Metric::Emd1),
            "emd2" => Ok(Metric::Emd2),
            other => Err(Error::invalid("metric", format!("unknown metric `{other}` (sq|l1|emd1|emd2)"))),
        }
    }
}

#[inline]
pub fn squared_l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub cost: f64,
    /// `permutation[j]` is the index in `B` matched to `a_j`.
    pub permutation: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    pub cost: f64,
    pub k: usize,
    /// Row-major `k x k`; `flow[j * k + l]` units move from `a_j` to `b_l`.
    pub flow: Vec<u64>,
}

impl FlowResult {
    pub fn get(&self, j: usize, l: usize) -> u64 {
        self.flow[j * self.k + l]
    }
}

/// Certificate of an optimal matching, consumed by the prototype update.
#[derive(Debug, Clone, PartialEq)]
pub enum Coupling {
    Permutation(Vec<usize>),
    Flow(FlowResult),
}

/// Row-major `k x k` matrix of ground costs `ground(a_j, b_l)`.
pub fn cost_matrix(a: &Pattern, b: &Pattern, metric: Metric) -> Vec<f64> {
    let mut m = Vec::with_capacity(a.k() * b.k());
    for p in a.points() {
        for q in b.points() {
            m.push(metric.ground(p, q));
        }
    }
    m
}

fn check_unweighted(a: &Pattern, b: &Pattern, metric: Metric) -> Result<()> {
    if metric.is_weighted() {
        return Err(Error::UnsupportedMetric {
            metric: metric.name(),
            reason: "bijective matching needs sq or l1; use emd for weighted patterns",
        });
    }
    a.check_compatible(b)?;
    if a.is_weighted() {
        return Err(Error::Weightedness { needed: "unweighted", found: "weighted" });
    }
    Ok(())
}

fn check_weighted(a: &Pattern, b: &Pattern, metric: Metric) -> Result<()> {
    if !metric.is_weighted() {
        return Err(Error::UnsupportedMetric {
            metric: metric.name(),
            reason: "earth mover's distance needs emd1 or emd2",
        });
    }
    if a.k() != b.k() {
        return Err(Error::SizeMismatch { expected: a.k(), got: b.k() });
    }
    if a.d() != b.d() {
        return Err(Error::DimensionMismatch { expected: a.d(), got: b.d() });
    }
    match (a.total_weight(), b.total_weight()) {
        (Some(x), Some(y)) if x != y => Err(Error::WeightMismatch { left: x, right: y }),
        (Some(0), _) => Err(Error::ZeroTotalWeight),
        (Some(_), Some(_)) => Ok(()),
        _ => Err(Error::Weightedness { needed: "weighted", found: "unweighted" }),
    }
}

fn permutation_cost(costs: &[f64], k: usize, perm: &[usize]) -> f64 {
    perm.iter().enumerate().map(|(j, &l)| costs[j * k + l]).sum()
}

fn flow_cost(costs: &[f64], flow: &[u64]) -> f64 {
    flow.iter().zip(costs).map(|(&f, &c)| f as f64 * c).sum()
}

/// Exact minimum-cost bijection between two unweighted patterns.
pub fn match_cost(a: &Pattern, b: &Pattern, metric: Metric) -> Result<MatchResult> {
    check_unweighted(a, b, metric)?;
    let k = a.k();
    let costs = cost_matrix(a, b, metric);
    let permutation = hungarian::solve(&costs, k);
    let cost = permutation_cost(&costs, k, &permutation);
    Ok(MatchResult { cost, permutation })
}

/// Exhaustive search over all `k!` bijections. Test oracle; refuses `k > 8`.
pub fn brute_force_match(a: &Pattern, b: &Pattern, metric: Metric) -> Result<MatchResult> {
    check_unweighted(a, b, metric)?;
    let k = a.k();
    if k > BRUTE_FORCE_MAX_K {
        return Err(Error::TooLarge { k, max: BRUTE_FORCE_MAX_K });
    }
    let costs = cost_matrix(a, b, metric);
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = MatchResult { cost: permutation_cost(&costs, k, &perm), permutation: perm.clone() };
    // Heap's algorithm, iterative form.
    let mut c = vec![0usize; k];
    let mut i = 1;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let cost = permutation_cost(&costs, k, &perm);
            if cost < best.cost {
                best = MatchResult { cost, permutation: perm.clone() };
            }
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(best)
}

/// Cost of a feasible greedy coupling; never below the exact cost.
///
/// Unweighted: points of `a` in input order each take the nearest unmatched
/// point of `b`. Weighted: each source ships to its nearest sinks with
/// remaining demand.
pub fn approx_match_cost(a: &Pattern, b: &Pattern, metric: Metric) -> Result<f64> {
    let k = a.k();
    if metric.is_weighted() {
        check_weighted(a, b, metric)?;
        let costs = cost_matrix(a, b, metric);
        let flow = emd::greedy_transport(&costs, a.weights().unwrap_or_default(), b.weights().unwrap_or_default());
        return Ok(flow_cost(&costs, &flow));
    }
    check_unweighted(a, b, metric)?;
    let costs = cost_matrix(a, b, metric);
    let mut taken = vec![false; k];
    let mut total = 0.0;
    for j in 0..k {
        let row = &costs[j * k..(j + 1) * k];
        let mut best = usize::MAX;
        for l in 0..k {
            if !taken[l] && (best == usize::MAX || row[l] < row[best]) {
                best = l;
            }
        }
        taken[best] = true;
        total += row[best];
    }
    Ok(total)
}

/// Exact earth mover's distance with an integral optimal flow.
pub fn emd(a: &Pattern, b: &Pattern, metric: Metric) -> Result<FlowResult> {
    check_weighted(a, b, metric)?;
    let costs = cost_matrix(a, b, metric);
    let flow = emd::transport(&costs, a.weights().unwrap_or_default(), b.weights().unwrap_or_default());
    Ok(FlowResult { cost: flow_cost(&costs, &flow), k: a.k(), flow })
}

/// Exact matching cost under any metric.
pub fn exact_cost(a: &Pattern, b: &Pattern, metric: Metric) -> Result<f64> {
    if metric.is_weighted() {
        emd(a, b, metric).map(|r| r.cost)
    } else {
        match_cost(a, b, metric).map(|r| r.cost)
    }
}

/// Exact cost together with the optimal coupling.
pub fn optimal_coupling(a: &Pattern, b: &Pattern, metric: Metric) -> Result<(f64, Coupling)> {
    if metric.is_weighted() {
        let r = emd(a, b, metric)?;
        Ok((r.cost, Coupling::Flow(r)))
    } else {
        let r = match_cost(a, b, metric)?;
        Ok((r.cost, Coupling::Permutation(r.permutation)))
    }
}

/// `lhs <= rhs` up to `REL_TOL` relative to the larger side.
#[inline]
pub fn le_with_slack(lhs: f64, rhs: f64, scale: f64) -> bool {
    lhs <= rhs + REL_TOL * scale.max(lhs.abs()).max(rhs.abs()).max(f64::MIN_POSITIVE)
}

/// Checks the triangle-type inequalities that hold for `metric` on `(A, B, C)`.
///
/// Squared grounds (sq, emd2): `M(A,B) <= 2M(A,C) + 2M(C,B)` and
/// `|M(A,B) - M(A,C)| <= (1 + 1/eps) M(B,C) + eps M(A,B)`.
/// Plain grounds (l1, emd1): `M(A,B) <= M(A,C) + M(C,B)` and
/// `|M(A,B) - M(A,C)| <= M(B,C)`.
pub fn verify_match_triangle(a: &Pattern, b: &Pattern, c: &Pattern, eps: f64, metric: Metric) -> Result<bool> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid("eps", "must be positive"));
    }
    let ab = exact_cost(a, b, metric)?;
    let ac = exact_cost(a, c, metric)?;
    let cb = exact_cost(c, b, metric)?;
    let bc = exact_cost(b, c, metric)?;
    let scale = ab.max(ac).max(bc).max(cb);

    let ok = if metric.is_squared() {
        le_with_slack(ab, 2.0 * ac + 2.0 * cb, scale)
            && le_with_slack((ab - ac).abs(), (1.0 + 1.0 / eps) * bc + eps * ab, scale)
    } else {
        le_with_slack(ab, ac + cb, scale) && le_with_slack((ab - ac).abs(), bc, scale)
    };
    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1(xs: &[f64]) -> Pattern {
        Pattern::new(xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    fn w1(xs: &[(f64, u64)]) -> Pattern {
        Pattern::weighted(xs.iter().map(|&(x, _)| vec![x]).collect(), xs.iter().map(|&(_, w)| w).collect()).unwrap()
    }

    #[test]
    fn identical_sets_cost_zero() {
        let a = Pattern::new(vec![vec![0.3, 1.0], vec![-2.0, 4.5], vec![7.0, 7.0]]).unwrap();
        for m in [Metric::SquaredL2, Metric::L1] {
            let r = match_cost(&a, &a, m).unwrap();
            assert_eq!(r.cost, 0.0);
            assert_eq!(r.permutation, vec![0, 1, 2]);
        }
    }

    #[test]
    fn swapped_points() {
        let r = match_cost(&p1(&[0.0, 10.0]), &p1(&[10.0, 0.0]), Metric::SquaredL2).unwrap();
        assert_eq!(r.cost, 0.0);
        assert_eq!(r.permutation, vec![1, 0]);
    }

    #[test]
    fn single_point_brute_force() {
        let a = Pattern::new(vec![vec![1.0, 2.0]]).unwrap();
        let b = Pattern::new(vec![vec![4.0, 6.0]]).unwrap();
        assert_eq!(brute_force_match(&a, &b, Metric::SquaredL2).unwrap().cost, 25.0);
        assert_eq!(brute_force_match(&a, &b, Metric::L1).unwrap().cost, 7.0);
        assert_eq!(brute_force_match(&a, &a, Metric::SquaredL2).unwrap().cost, 0.0);
    }

    #[test]
    fn brute_force_refuses_large_k() {
        let xs: Vec<f64> = (0..9).map(f64::from).collect();
        let err = brute_force_match(&p1(&xs), &p1(&xs), Metric::SquaredL2).unwrap_err();
        assert!(matches!(err, Error::TooLarge { k: 9, max: 8 }));
    }

    #[test]
    fn greedy_hand_example() {
        // A = {0, 1}, B = {0.9, 2.1}. Identity: 0.81 + 1.21 = 2.02.
        // Swap: 4.41 + 0.01 = 4.42. Greedy: 0 -> 0.9, 1 -> 2.1 = 2.02.
        let a = p1(&[0.0, 1.0]);
        let b = p1(&[0.9, 2.1]);
        let exact = match_cost(&a, &b, Metric::SquaredL2).unwrap().cost;
        let greedy = approx_match_cost(&a, &b, Metric::SquaredL2).unwrap();
        assert!((exact - 2.02).abs() < 1e-12);
        assert!((greedy - 2.02).abs() < 1e-12);
        assert!(greedy >= exact);

        // Scan order matters: B = {0.6, -1} makes point 0 grab 0.6 first.
        // Greedy: 0.36 + 4 = 4.36; optimum: 1 + 0.16 = 1.16.
        let b = p1(&[0.6, -1.0]);
        let exact = match_cost(&a, &b, Metric::SquaredL2).unwrap().cost;
        let greedy = approx_match_cost(&a, &b, Metric::SquaredL2).unwrap();
        assert!((exact - 1.16).abs() < 1e-12);
        assert!((greedy - 4.36).abs() < 1e-12);
    }

    #[test]
    fn greedy_identical_is_zero() {
        let a = Pattern::new(vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.4, 0.5]]).unwrap();
        assert_eq!(approx_match_cost(&a, &a, Metric::SquaredL2).unwrap(), 0.0);
        assert_eq!(approx_match_cost(&a, &a, Metric::L1).unwrap(), 0.0);
    }

    #[test]
    fn emd_moves_one_unit() {
        let a = w1(&[(0.0, 2), (1.0, 1)]);
        let b = w1(&[(0.0, 1), (1.0, 2)]);
        let r = emd(&a, &b, Metric::Emd2).unwrap();
        assert_eq!(r.cost, 1.0);
        assert_eq!(r.flow, vec![1, 1, 0, 1]);
    }

    #[test]
    fn emd_identity_is_diagonal() {
        let a = Pattern::weighted(vec![vec![0.0, 1.0], vec![3.0, 2.0], vec![5.0, -1.0]], vec![4, 0, 2]).unwrap();
        for m in [Metric::Emd1, Metric::Emd2] {
            let r = emd(&a, &a, m).unwrap();
            assert_eq!(r.cost, 0.0);
            assert_eq!(r.flow, vec![4, 0, 0, 0, 0, 0, 0, 0, 2]);
        }
    }

    #[test]
    fn emd_rejects_unequal_mass() {
        let a = w1(&[(0.0, 2), (1.0, 1)]);
        let b = w1(&[(0.0, 2), (1.0, 2)]);
        assert!(matches!(emd(&a, &b, Metric::Emd1), Err(Error::WeightMismatch { left: 3, right: 4 })));
    }

    #[test]
    fn zero_total_weight_rejected_at_construction() {
        assert!(matches!(Pattern::weighted(vec![vec![0.0]], vec![0]), Err(Error::ZeroTotalWeight)));
    }

    #[test]
    fn shape_errors() {
        let a = p1(&[0.0, 1.0]);
        let b = p1(&[0.0, 1.0, 2.0]);
        assert!(matches!(match_cost(&a, &b, Metric::SquaredL2), Err(Error::SizeMismatch { .. })));
        let c = Pattern::new(vec![vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(match_cost(&a, &c, Metric::L1), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(match_cost(&a, &a, Metric::Emd2), Err(Error::UnsupportedMetric { .. })));
        assert!(matches!(emd(&a, &a, Metric::Emd2), Err(Error::Weightedness { .. })));
    }

    #[test]
    fn non_finite_rejected() {
        let err = Pattern::new(vec![vec![0.0, f64::NAN]]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { point: 0, axis: 1 }));
        assert!(Pattern::new(vec![vec![f64::INFINITY]]).is_err());
    }

    #[test]
    fn triangle_identity() {
        let a = Pattern::new(vec![vec![0.0, 1.0], vec![2.0, 3.0]]).unwrap();
        for eps in [0.1, 0.5, 1.0] {
            assert!(verify_match_triangle(&a, &a, &a, eps, Metric::SquaredL2).unwrap());
            assert!(verify_match_triangle(&a, &a, &a, eps, Metric::L1).unwrap());
        }
    }

    #[test]
    fn metric_parse_roundtrip() {
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        assert!("l3".parse::<Metric>().is_err());
    }
}
