//! Sensitivity-sampling coresets over whole patterns.
//!
//! Each pattern is treated as one abstract point. Given a pivot pattern
//! `P_p` and `L = sum_i M(P_i, P_p)`, the sensitivity of pattern `i` is
//! bounded above by
//!
//! ```text
//! t_i = c(alpha) * M(P_i, P_p) / L + (4 alpha + 16) / n
//! ```
//!
//! with `c = 8(alpha + 1)` for squared grounds and `c = 2(alpha + 1)` for
//! grounds obeying the plain triangle inequality. Patterns are then drawn
//! i.i.d. with probability `t_i / T` and weighted `T / (r t_i)`, which makes
//! the weighted objective an unbiased estimate of the full one for every
//! candidate prototype.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::{self, Metric};
use crate::parallel::map_indexed;
use crate::pattern::{Instance, Pattern, Prototype};
use crate::prototype::{self, SolverConfig};

pub const DEFAULT_ALPHA: f64 = 3.0;
pub const DEFAULT_TRIALS: usize = 3;
/// Default constant in front of `(kd / eps^2) log(kd / eps)`.
pub const DEFAULT_SIZE_CONSTANT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostMode {
    /// Hungarian / min-cost flow.
    #[default]
    Exact,
    /// Greedy feasible coupling (an upper bound on the exact cost).
    Approx,
}

impl std::str::FromStr for CostMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(CostMode::Exact),
            "approx" => Ok(CostMode::Approx),
            other => Err(Error::invalid("cost-mode", format!("unknown cost mode `{other}` (exact|approx)"))),
        }
    }
}

/// Coefficient of the cost term in the sensitivity bound.
pub fn cost_coefficient(alpha: f64, metric: Metric) -> f64 {
    if metric.is_squared() {
        8.0 * (alpha + 1.0)
    } else {
        2.0 * (alpha + 1.0)
    }
}

/// Additive floor `(4 alpha + 16) / n` of every sensitivity bound.
pub fn floor_term(alpha: f64, n: usize) -> f64 {
    (4.0 * alpha + 16.0) / n as f64
}

/// Upper bound on `T` when exact costs are used.
pub fn total_cap(alpha: f64, metric: Metric) -> f64 {
    cost_coefficient(alpha, metric) + 4.0 * alpha + 16.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityProfile {
    pub pivot: usize,
    pub alpha: f64,
    pub metric: Metric,
    pub cost_mode: CostMode,
    /// `sum_i M(P_i, P_pivot)`.
    pub delta_tilde: f64,
    pub t_upper: Vec<f64>,
    pub t_sum: f64,
    pub costs_to_pivot: Vec<f64>,
    /// All costs were zero; the profile fell back to uniform bounds.
    pub degenerate: bool,
    pub fingerprint: u64,
}

impl SensitivityProfile {
    pub fn n(&self) -> usize {
        self.t_upper.len()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("alpha", format!("must be > 1, got {alpha}")))
    }
}

/// Computes all costs to the pivot and the sensitivity upper bounds.
pub fn sensitivities(
    inst: &Instance,
    pivot: usize,
    alpha: f64,
    metric: Metric,
    cost_mode: CostMode,
) -> Result<SensitivityProfile> {
    if pivot >= inst.n() {
        return Err(Error::invalid("pivot", format!("index {pivot} out of range for n={}", inst.n())));
    }
    let anchor = inst.pattern(pivot);
    let costs = map_indexed(inst.n(), |i| {
        if i == pivot {
            return Ok(0.0);
        }
        match cost_mode {
            CostMode::Exact => matching::exact_cost(inst.pattern(i), anchor, metric),
            CostMode::Approx => matching::approx_match_cost(inst.pattern(i), anchor, metric),
        }
    })?;
    profile_from_costs(inst, pivot, costs, alpha, metric, cost_mode)
}

/// Chooses the pivot as in [`prototype::pick_init`], scoring candidates with
/// exact or greedy costs, and returns its sensitivity profile.
pub fn pivot_profile<R: Rng + ?Sized>(
    inst: &Instance,
    trials: usize,
    alpha: f64,
    metric: Metric,
    cost_mode: CostMode,
    rng: &mut R,
) -> Result<(SensitivityProfile, usize)> {
    match cost_mode {
        CostMode::Exact => {
            let pivot = prototype::pick_init(inst, trials, metric, rng)?;
            let matchings = pivot.matchings;
            Ok((profile_from_costs(inst, pivot.index, pivot.costs, alpha, metric, cost_mode)?, matchings))
        }
        CostMode::Approx => {
            if trials == 0 {
                return Err(Error::invalid("trials", "must be at least 1"));
            }
            let n = inst.n();
            let mut best: Option<(f64, usize, Vec<f64>)> = None;
            let mut matchings = 0;
            let mut seen = Vec::new();
            for _ in 0..trials {
                let idx = rng.random_range(0..n);
                if seen.contains(&idx) {
                    continue;
                }
                seen.push(idx);
                let anchor = inst.pattern(idx);
                let costs = map_indexed(n, |i| {
                    if i == idx {
                        Ok(0.0)
                    } else {
                        matching::approx_match_cost(inst.pattern(i), anchor, metric)
                    }
                })?;
                matchings += n;
                let value = prototype::weighted_sum(inst.pattern_weights(), &costs);
                if best.as_ref().is_none_or(|b| value < b.0) {
                    best = Some((value, idx, costs));
                }
            }
            let (_, idx, costs) = best.ok_or(Error::Empty("no candidates"))?;
            Ok((profile_from_costs(inst, idx, costs, alpha, metric, cost_mode)?, matchings))
        }
    }
}

/// Builds a profile from already computed costs to the pivot (for instance
/// the ones produced while choosing the pivot).
pub fn profile_from_costs(
    inst: &Instance,
    pivot: usize,
    costs_to_pivot: Vec<f64>,
    alpha: f64,
    metric: Metric,
    cost_mode: CostMode,
) -> Result<SensitivityProfile> {
    check_alpha(alpha)?;
    let n = inst.n();
    if costs_to_pivot.len() != n {
        return Err(Error::SizeMismatch { expected: n, got: costs_to_pivot.len() });
    }
    if costs_to_pivot.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::Numerical("matching costs must be finite and non-negative".into()));
    }
    let delta_tilde = costs_to_pivot.iter().fold(0.0, |acc, c| acc + c);
    let coef = cost_coefficient(alpha, metric);
    let floor = floor_term(alpha, n);
    let degenerate = delta_tilde <= 0.0;
    let t_upper: Vec<f64> = if degenerate {
        vec![floor; n]
    } else {
        costs_to_pivot.iter().map(|c| coef * c / delta_tilde + floor).collect()
    };
    let t_sum = t_upper.iter().fold(0.0, |acc, t| acc + t);
    Ok(SensitivityProfile {
        pivot,
        alpha,
        metric,
        cost_mode,
        delta_tilde,
        t_upper,
        t_sum,
        costs_to_pivot,
        degenerate,
        fingerprint: inst.fingerprint(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoresetEntry {
    pub index: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coreset {
    /// One entry per draw; repeated indices stay separate.
    pub entries: Vec<CoresetEntry>,
    pub r: usize,
    pub t_sum: f64,
    pub alpha: f64,
    pub pivot: usize,
    pub delta_tilde: f64,
    pub seed: Option<u64>,
    pub fingerprint: u64,
}

impl Coreset {
    /// Every pattern once with weight 1. Evaluates exactly like the instance.
    pub fn full(inst: &Instance, pivot: usize, delta_tilde: f64) -> Self {
        Self {
            entries: (0..inst.n()).map(|index| CoresetEntry { index, weight: 1.0 }).collect(),
            r: inst.n(),
            t_sum: inst.n() as f64,
            alpha: DEFAULT_ALPHA,
            pivot,
            delta_tilde,
            seed: None,
            fingerprint: inst.fingerprint(),
        }
    }

    pub fn check_source(&self, inst: &Instance) -> Result<()> {
        let fp = inst.fingerprint();
        if fp != self.fingerprint {
            return Err(Error::FingerprintMismatch {
                expected: crate::io::fingerprint_hex(fp),
                found: crate::io::fingerprint_hex(self.fingerprint),
            });
        }
        if let Some(e) = self.entries.iter().find(|e| e.index >= inst.n()) {
            return Err(Error::Data(format!("coreset index {} out of range", e.index)));
        }
        Ok(())
    }

    /// The sampled patterns as a weighted instance (multipliers compose with
    /// the source instance's own multipliers).
    pub fn to_instance(&self, inst: &Instance) -> Result<Instance> {
        self.check_source(inst)?;
        let patterns: Vec<Pattern> = self.entries.iter().map(|e| inst.pattern(e.index).clone()).collect();
        let weights = self.entries.iter().map(|e| e.weight * inst.pattern_weights()[e.index]).collect();
        Instance::with_pattern_weights(patterns, weights)
    }
}

/// Draws `r` patterns i.i.d. from `t_i / T`, each weighted `(1/r)(T/t_i)`.
pub fn sample_coreset<R: Rng + ?Sized>(profile: &SensitivityProfile, r: usize, rng: &mut R) -> Result<Coreset> {
    if r == 0 {
        return Err(Error::invalid("r", "sample size must be at least 1"));
    }
    let dist = WeightedIndex::new(&profile.t_upper).map_err(|e| Error::Numerical(format!("sampling weights: {e}")))?;
    let scale = profile.t_sum / r as f64;
    let entries = (0..r)
        .map(|_| {
            let index = dist.sample(rng);
            CoresetEntry { index, weight: scale / profile.t_upper[index] }
        })
        .collect();
    Ok(Coreset {
        entries,
        r,
        t_sum: profile.t_sum,
        alpha: profile.alpha,
        pivot: profile.pivot,
        delta_tilde: profile.delta_tilde,
        seed: None,
        fingerprint: profile.fingerprint,
    })
}

/// `sum_l w_l * M(P_l, q)` over the coreset entries.
pub fn weighted_objective(inst: &Instance, cs: &Coreset, q: &Prototype, metric: Metric) -> Result<f64> {
    cs.check_source(inst)?;
    inst.check_prototype(q)?;
    let costs = map_indexed(cs.entries.len(), |l| matching::exact_cost(inst.pattern(cs.entries[l].index), q, metric))?;
    Ok(cs
        .entries
        .iter()
        .zip(&costs)
        .fold(0.0, |acc, (e, c)| acc + e.weight * inst.pattern_weights()[e.index] * c))
}

/// `ceil(C (kd/eps^2) ln(max(kd/eps, e)))`.
pub fn recommended_size(k: usize, d: usize, eps: f64, constant: f64) -> Result<usize> {
    if k == 0 || d == 0 {
        return Err(Error::invalid("k, d", "must be at least 1"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid("eps", format!("must lie in (0, 1), got {eps}")));
    }
    if !(constant > 0.0 && constant.is_finite()) {
        return Err(Error::invalid("constant", "must be positive"));
    }
    let kd = (k * d) as f64;
    let log = (kd / eps).max(std::f64::consts::E).ln();
    Ok((constant * kd / (eps * eps) * log).ceil().max(1.0) as usize)
}

/// Weighted patterns add `C (k/eps^2) ln W` for the choice of prototype masses.
pub fn recommended_size_weighted(k: usize, d: usize, total_weight: u64, eps: f64, constant: f64) -> Result<usize> {
    let base = recommended_size(k, d, eps, constant)?;
    let extra = constant * k as f64 / (eps * eps) * (total_weight.max(1) as f64).ln();
    Ok(base + extra.ceil() as usize)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub max_rel_error: f64,
    /// Relative error per probe; the last one is the solver output.
    pub rel_errors: Vec<f64>,
    /// Probe radius `4L/n` in matching cost around the pivot.
    pub radius: f64,
}

fn rel_error(full: f64, approx: f64) -> f64 {
    if full > 0.0 {
        (full - approx).abs() / full
    } else if approx == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Random probe near the pivot with `M(q, pivot) <= radius`.
///
/// Gaussian displacements are scaled so the identity coupling, which bounds
/// the optimal matching cost from above, costs a uniform fraction of the
/// radius.
pub fn probe_near<R: Rng + ?Sized>(pivot: &Pattern, radius: f64, metric: Metric, rng: &mut R) -> Result<Prototype> {
    let noise: Vec<f64> = (0..pivot.coords().len()).map(|_| rng.sample(StandardNormal)).collect();
    let d = pivot.d();
    let mass = |j: usize| pivot.weights().map_or(1.0, |w| w[j] as f64);
    let zero = vec![0.0; d];
    let unit_cost: f64 = (0..pivot.k()).map(|j| mass(j) * metric.ground(&noise[j * d..(j + 1) * d], &zero)).sum();
    let target = rng.random_range(0.0..=1.0) * radius;
    let scale = if unit_cost > 0.0 {
        let ratio = target / unit_cost;
        if metric.is_squared() {
            ratio.sqrt()
        } else {
            ratio
        }
    } else {
        0.0
    };
    let coords = pivot.coords().iter().zip(&noise).map(|(x, z)| x + scale * z).collect();
    pivot.with_coords(coords)
}

/// Maximum relative error of the coreset estimate over `probes` random
/// prototypes within matching cost `4L/n` of the pivot, plus the prototype
/// obtained by solving on the coreset.
pub fn validate_coreset<R: Rng + ?Sized>(
    inst: &Instance,
    cs: &Coreset,
    probes: usize,
    metric: Metric,
    rng: &mut R,
) -> Result<ValidationReport> {
    if probes == 0 {
        return Err(Error::invalid("probes", "must be at least 1"));
    }
    cs.check_source(inst)?;
    if cs.pivot >= inst.n() {
        return Err(Error::Data(format!("coreset pivot {} out of range", cs.pivot)));
    }
    let pivot = inst.pattern(cs.pivot);
    let radius = 4.0 * cs.delta_tilde / inst.n() as f64;

    let mut candidates = Vec::with_capacity(probes + 1);
    for _ in 0..probes {
        candidates.push(probe_near(pivot, radius, metric, rng)?);
    }
    let sub = cs.to_instance(inst)?;
    let solved = prototype::alternating_minimize(&sub, pivot, metric, SolverConfig::default())?;
    candidates.push(solved.prototype);

    let mut rel_errors = Vec::with_capacity(candidates.len());
    for q in &candidates {
        let full = prototype::objective(inst, q, metric)?;
        let approx = weighted_objective(inst, cs, q, metric)?;
        rel_errors.push(rel_error(full, approx));
    }
    let max_rel_error = rel_errors.iter().copied().fold(0.0, f64::max);
    Ok(ValidationReport { max_rel_error, rel_errors, radius })
}
