//! Random projection of an instance to `O(log(nk)/eps^2)` dimensions and
//! lifting of a low-dimensional prototype back to the original space.
//!
//! The projection matrix has i.i.d. `+-1/sqrt(m)` entries. Lifting couples
//! every projected pattern to the low-dimensional prototype once and then
//! applies the slot update to the original points with those couplings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matching::{self, Coupling, Metric};
use crate::parallel::map_indexed;
use crate::pattern::{Instance, Pattern, Prototype};
use crate::prototype::{update_prototype, Update};

/// Default constant in `C ln(nk) / eps^2`.
pub const DEFAULT_JL_CONSTANT: f64 = 4.0;

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("eps", format!("must lie in (0, 1), got {eps}")))
    }
}

/// `ceil(constant * ln_count / eps^2)`, at least 1.
pub fn jl_dim(ln_count: f64, eps: f64, constant: f64) -> Result<usize> {
    check_eps(eps)?;
    if !(constant > 0.0 && constant.is_finite()) {
        return Err(Error::invalid("constant", "must be positive"));
    }
    Ok((constant * ln_count.max(0.0) / (eps * eps)).ceil().max(1.0) as usize)
}

/// Target dimension for `n` patterns of `k` points in `R^d`, capped at `d`.
pub fn target_dim(n: usize, k: usize, d: usize, eps: f64, constant: f64) -> Result<usize> {
    let m = jl_dim(((n * k) as f64).ln(), eps, constant)?;
    Ok(m.min(d))
}

/// Rejects metrics for which random projection gives no guarantee.
pub fn check_projectable(metric: Metric) -> Result<()> {
    if metric == Metric::L1 {
        return Err(Error::UnsupportedMetric { metric: metric.name(), reason: "random projection does not preserve l1" });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// Row-major `m x d`.
    pub matrix: Vec<f64>,
    pub source_dim: usize,
    pub target_dim: usize,
    pub seed: u64,
}

impl Projection {
    /// Rademacher matrix scaled by `1/sqrt(m)`, reproducible from `seed`.
    pub fn rademacher(source_dim: usize, target_dim: usize, seed: u64) -> Result<Self> {
        if target_dim == 0 || target_dim > source_dim {
            return Err(Error::invalid(
                "target_dim",
                format!("need 1 <= m <= d, got m={target_dim}, d={source_dim}"),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = 1.0 / (target_dim as f64).sqrt();
        let matrix = (0..target_dim * source_dim).map(|_| if rng.random::<bool>() { s } else { -s }).collect();
        Ok(Self { matrix, source_dim, target_dim, seed })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.source_dim);
        self.matrix
            .chunks_exact(self.source_dim)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn apply_pattern(&self, p: &Pattern) -> Result<Pattern> {
        if p.d() != self.source_dim {
            return Err(Error::DimensionMismatch { expected: self.source_dim, got: p.d() });
        }
        let coords: Vec<f64> = p.points().flat_map(|x| self.apply(x)).collect();
        Pattern::from_flat(p.k(), self.target_dim, coords, p.weights().map(<[u64]>::to_vec))
    }
}

/// Projects every point of `inst` to `R^m`; pattern order, point weights
/// and per-pattern multipliers are preserved.
pub fn jl_project(inst: &Instance, m: usize, seed: u64) -> Result<(Instance, Projection)> {
    let proj = Projection::rademacher(inst.d(), m, seed)?;
    let patterns = map_indexed(inst.n(), |i| proj.apply_pattern(inst.pattern(i)))?;
    let projected = Instance::with_pattern_weights(patterns, inst.pattern_weights().to_vec())?;
    Ok((projected, proj))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lift {
    pub prototype: Prototype,
    pub empty_slots: Vec<usize>,
    pub matchings: usize,
}

/// Lifts `low_q` (fitted on `projected`) to the space of `original`.
pub fn lift_solution(original: &Instance, projected: &Instance, low_q: &Prototype, metric: Metric) -> Result<Lift> {
    check_projectable(metric)?;
    if original.n() != projected.n() {
        return Err(Error::SizeMismatch { expected: original.n(), got: projected.n() });
    }
    projected.check_prototype(low_q)?;
    let couplings = map_indexed(projected.n(), |i| {
        matching::optimal_coupling(projected.pattern(i), low_q, metric).map(|(_, c)| c)
    })?;
    let Update { prototype, empty_slots } = lift_with_couplings(original, &couplings, low_q.weights(), metric)?;
    Ok(Lift { prototype, empty_slots, matchings: projected.n() })
}

/// Slot update on the original points with fixed couplings. Slots that
/// receive no mass are placed at the weighted mean of all points.
pub fn lift_with_couplings(
    original: &Instance,
    couplings: &[Coupling],
    weights: Option<&[u64]>,
    metric: Metric,
) -> Result<Update> {
    let (k, d) = (original.k(), original.d());
    let mut mean = vec![0.0; d];
    let mut mass = 0.0;
    for (p, &u) in original.patterns().iter().zip(original.pattern_weights()) {
        for (j, x) in p.points().enumerate() {
            let w = u * p.weights().map_or(1.0, |w| w[j] as f64);
            mass += w;
            for (m, v) in mean.iter_mut().zip(x) {
                *m += w * v;
            }
        }
    }
    if mass > 0.0 {
        mean.iter_mut().for_each(|m| *m /= mass);
    }
    let coords: Vec<f64> = (0..k).flat_map(|_| mean.iter().copied()).collect();
    let fallback = Pattern::from_flat(k, d, coords, weights.map(<[u64]>::to_vec))?;
    update_prototype(original, couplings, &fallback, metric)
}
