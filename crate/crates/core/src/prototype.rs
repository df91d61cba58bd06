//! Objective evaluation, pivot initialization and the alternating solver.
//!
//! The objective of a candidate `Q` is `sum_i u_i * M(P_i, Q)` where `u_i` is
//! the instance's per-pattern multiplier. The solver alternates between
//! computing optimal couplings of every pattern to the current prototype and
//! moving every prototype slot to the minimizer of its coupled cost: the
//! weighted mean (squared grounds), the coordinate-wise weighted median (l1)
//! or the weighted geometric median (emd1). Each half-step is a minimization
//! with the other variable fixed, so the objective never increases.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matching::{self, Coupling, Metric};
use crate::parallel::map_indexed;
use crate::pattern::{Instance, Prototype};

pub const DEFAULT_MAX_ROUNDS: usize = 100;
pub const DEFAULT_REL_TOL: f64 = 1e-6;

/// Evaluates `sum_i u_i * M(P_i, q)` with exact kernels.
pub fn objective(inst: &Instance, q: &Prototype, metric: Metric) -> Result<f64> {
    let costs = pattern_costs(inst, q, metric)?;
    Ok(weighted_sum(inst.pattern_weights(), &costs))
}

/// Exact `M(P_i, q)` for every pattern, without the per-pattern multiplier.
pub fn pattern_costs(inst: &Instance, q: &Prototype, metric: Metric) -> Result<Vec<f64>> {
    inst.check_prototype(q)?;
    map_indexed(inst.n(), |i| matching::exact_cost(inst.pattern(i), q, metric))
}

/// Index-ordered `sum_i w_i * c_i`.
pub fn weighted_sum(weights: &[f64], costs: &[f64]) -> f64 {
    weights.iter().zip(costs).fold(0.0, |acc, (w, c)| acc + w * c)
}

/// A pattern of the instance chosen as starting point and sensitivity anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct Pivot {
    pub index: usize,
    /// Objective of the instance evaluated at the pivot pattern.
    pub objective: f64,
    /// `M(P_i, P_pivot)` for every `i`, without multipliers.
    pub costs: Vec<f64>,
    /// Number of exact matchings computed while choosing.
    pub matchings: usize,
}

/// Samples `trials` pattern indices uniformly with replacement and keeps the
/// one whose pattern, used as prototype, has the lowest objective.
pub fn pick_init<R: Rng + ?Sized>(inst: &Instance, trials: usize, metric: Metric, rng: &mut R) -> Result<Pivot> {
    if trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let n = inst.n();
    let candidates: Vec<usize> = (0..trials).map(|_| rng.random_range(0..n)).collect();
    best_of(inst, &candidates, metric)
}

/// Best pivot among explicit candidates (first one wins ties).
pub fn best_of(inst: &Instance, candidates: &[usize], metric: Metric) -> Result<Pivot> {
    let mut best: Option<Pivot> = None;
    let mut seen: Vec<usize> = Vec::new();
    let mut matchings = 0;
    for &idx in candidates {
        if idx >= inst.n() {
            return Err(Error::invalid("candidate", format!("index {idx} out of range")));
        }
        if seen.contains(&idx) {
            continue;
        }
        seen.push(idx);
        let costs = pattern_costs(inst, inst.pattern(idx), metric)?;
        matchings += inst.n();
        let value = weighted_sum(inst.pattern_weights(), &costs);
        if best.as_ref().is_none_or(|b| value < b.objective) {
            best = Some(Pivot { index: idx, objective: value, costs, matchings: 0 });
        }
    }
    let mut best = best.ok_or(Error::Empty("no candidates"))?;
    best.matchings = matchings;
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Update {
    pub prototype: Prototype,
    /// Slots that received no mass and kept their previous location.
    pub empty_slots: Vec<usize>,
}

/// Moves every slot of `previous` to the minimizer of its coupled cost.
///
/// `couplings[i]` couples pattern `i` (rows) to the prototype slots (columns),
/// as returned by [`matching::optimal_coupling`]`(P_i, previous)`.
pub fn update_prototype(
    inst: &Instance,
    couplings: &[Coupling],
    previous: &Prototype,
    metric: Metric,
) -> Result<Update> {
    inst.check_prototype(previous)?;
    if couplings.len() != inst.n() {
        return Err(Error::SizeMismatch { expected: inst.n(), got: couplings.len() });
    }
    let (k, d) = (inst.k(), inst.d());

    // Per slot: (pattern index, point index, mass) in pattern order.
    let mut members: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); k];
    for (i, coupling) in couplings.iter().enumerate() {
        let u = inst.pattern_weights()[i];
        match (coupling, metric.is_weighted()) {
            (Coupling::Permutation(perm), false) => {
                if perm.len() != k {
                    return Err(Error::SizeMismatch { expected: k, got: perm.len() });
                }
                for (j, &slot) in perm.iter().enumerate() {
                    if slot >= k {
                        return Err(Error::invalid("couplings", "slot index out of range"));
                    }
                    members[slot].push((i, j, u));
                }
            }
            (Coupling::Flow(flow), true) => {
                if flow.k != k {
                    return Err(Error::SizeMismatch { expected: k, got: flow.k });
                }
                for j in 0..k {
                    for (slot, slot_members) in members.iter_mut().enumerate() {
                        let f = flow.get(j, slot);
                        if f > 0 {
                            slot_members.push((i, j, u * f as f64));
                        }
                    }
                }
            }
            _ => return Err(Error::invalid("couplings", "coupling kind does not match the metric")),
        }
    }

    let mut coords = previous.coords().to_vec();
    let mut empty_slots = Vec::new();
    for (slot, list) in members.iter().enumerate() {
        let mass: f64 = list.iter().map(|m| m.2).sum();
        if mass <= 0.0 {
            empty_slots.push(slot);
            continue;
        }
        let out = &mut coords[slot * d..(slot + 1) * d];
        let point = |&(i, j, _): &(usize, usize, f64)| inst.pattern(i).point(j);
        match metric {
            Metric::SquaredL2 | Metric::Emd2 => {
                out.fill(0.0);
                for m in list {
                    for (o, x) in out.iter_mut().zip(point(m)) {
                        *o += m.2 * x;
                    }
                }
                out.iter_mut().for_each(|o| *o /= mass);
            }
            Metric::L1 => {
                let mut column: Vec<(f64, f64)> = Vec::with_capacity(list.len());
                for (axis, o) in out.iter_mut().enumerate() {
                    column.clear();
                    column.extend(list.iter().map(|m| (point(m)[axis], m.2)));
                    *o = weighted_lower_median(&mut column);
                }
            }
            Metric::Emd1 => {
                let pts: Vec<(&[f64], f64)> = list.iter().map(|m| (point(m), m.2)).collect();
                geometric_median_step(&pts, out);
            }
        }
        if out.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!("prototype slot {slot} became non-finite")));
        }
    }
    Ok(Update { prototype: previous.with_coords(coords)?, empty_slots })
}

/// Smallest value whose cumulative weight reaches half the total.
pub fn weighted_lower_median(values: &mut [(f64, f64)]) -> f64 {
    values.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = values.iter().map(|v| v.1).sum();
    let half = 0.5 * total;
    let mut acc = 0.0;
    for &(x, w) in values.iter() {
        acc += w;
        if acc >= half {
            return x;
        }
    }
    values.last().map_or(0.0, |v| v.0)
}

fn euclid_cost(pts: &[(&[f64], f64)], y: &[f64]) -> f64 {
    pts.iter().map(|(p, w)| w * matching::squared_l2(p, y).sqrt()).sum()
}

/// Weiszfeld iterations from the current location; a step is only accepted
/// when it lowers the weighted distance sum.
fn geometric_median_step(pts: &[(&[f64], f64)], y: &mut [f64]) {
    const ITERS: usize = 50;
    let d = y.len();
    let mut cost = euclid_cost(pts, y);
    let mut next = vec![0.0; d];
    for _ in 0..ITERS {
        next.fill(0.0);
        let mut denom = 0.0;
        for (p, w) in pts {
            let dist = matching::squared_l2(p, y).sqrt();
            if dist <= f64::EPSILON {
                continue;
            }
            let c = w / dist;
            denom += c;
            for (n, x) in next.iter_mut().zip(p.iter()) {
                *n += c * x;
            }
        }
        if denom <= 0.0 {
            return;
        }
        next.iter_mut().for_each(|n| *n /= denom);
        let next_cost = euclid_cost(pts, &next);
        if next_cost >= cost {
            return;
        }
        let moved = (cost - next_cost) / cost.max(f64::MIN_POSITIVE);
        y.copy_from_slice(&next);
        cost = next_cost;
        if moved < 1e-12 {
            return;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub max_rounds: usize,
    pub rel_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { max_rounds: DEFAULT_MAX_ROUNDS, rel_tol: DEFAULT_REL_TOL }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub prototype: Prototype,
    /// Objective at the initial prototype, then after every round.
    pub objective_history: Vec<f64>,
    pub rounds: usize,
    pub converged: bool,
    /// Slots left empty in some round (location retained).
    pub empty_slots: Vec<usize>,
    /// Number of exact matchings computed.
    pub matchings: usize,
}

impl SolveReport {
    pub fn objective(&self) -> f64 {
        *self.objective_history.last().expect("history is never empty")
    }
}

fn couple_all(inst: &Instance, q: &Prototype, metric: Metric) -> Result<(f64, Vec<Coupling>)> {
    let pairs = map_indexed(inst.n(), |i| matching::optimal_coupling(inst.pattern(i), q, metric))?;
    let mut value = 0.0;
    let mut couplings = Vec::with_capacity(pairs.len());
    for ((cost, coupling), w) in pairs.into_iter().zip(inst.pattern_weights()) {
        value += w * cost;
        couplings.push(coupling);
    }
    if !value.is_finite() {
        return Err(Error::Numerical("objective became non-finite".into()));
    }
    Ok((value, couplings))
}

/// Alternates exact couplings and slot updates until the relative objective
/// improvement drops below `cfg.rel_tol` or `cfg.max_rounds` is reached.
pub fn alternating_minimize(inst: &Instance, init: &Prototype, metric: Metric, cfg: SolverConfig) -> Result<SolveReport> {
    if cfg.max_rounds == 0 {
        return Err(Error::invalid("max_rounds", "must be at least 1"));
    }
    if !(cfg.rel_tol >= 0.0) {
        return Err(Error::invalid("rel_tol", "must be non-negative"));
    }
    inst.check_prototype(init)?;

    let mut q = init.clone();
    let (mut value, mut couplings) = couple_all(inst, &q, metric)?;
    let mut report = SolveReport {
        prototype: q.clone(),
        objective_history: vec![value],
        rounds: 0,
        converged: false,
        empty_slots: Vec::new(),
        matchings: inst.n(),
    };

    for round in 1..=cfg.max_rounds {
        let update = update_prototype(inst, &couplings, &q, metric)?;
        for s in update.empty_slots {
            if !report.empty_slots.contains(&s) {
                report.empty_slots.push(s);
            }
        }
        let (next_value, next_couplings) = couple_all(inst, &update.prototype, metric)?;
        report.matchings += inst.n();
        report.rounds = round;
        report.objective_history.push(next_value);

        let gain = (value - next_value) / value.max(f64::EPSILON);
        q = update.prototype;
        value = next_value;
        couplings = next_couplings;
        if gain < cfg.rel_tol {
            report.converged = true;
            break;
        }
    }
    report.prototype = q;
    Ok(report)
}
