//! Point-set patterns and instances.
//!
//! A [`Pattern`] is `k` points in `R^d`, stored row-major, optionally carrying
//! non-negative integer point weights. An [`Instance`] is an ordered list of
//! patterns sharing `k`, `d` and (when weighted) the total weight `W`, plus a
//! non-negative multiplier per pattern. Coresets are consumed as instances
//! whose multipliers are the sampling weights.

use std::sync::OnceLock;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    k: usize,
    d: usize,
    coords: Vec<f64>,
    weights: Option<Vec<u64>>,
}

/// Candidate solutions share the pattern representation.
pub type Prototype = Pattern;

impl Pattern {
    /// Unweighted pattern from a list of points.
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let (k, d, coords) = flatten(points)?;
        Self::from_flat(k, d, coords, None)
    }

    /// Weighted pattern; `weights[j]` belongs to `points[j]`.
    pub fn weighted(points: Vec<Vec<f64>>, weights: Vec<u64>) -> Result<Self> {
        let (k, d, coords) = flatten(points)?;
        Self::from_flat(k, d, coords, Some(weights))
    }

    pub fn from_flat(k: usize, d: usize, coords: Vec<f64>, weights: Option<Vec<u64>>) -> Result<Self> {
        if k == 0 {
            return Err(Error::Empty("pattern has no points"));
        }
        if d == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        if coords.len() != k * d {
            return Err(Error::Data(format!(
                "coordinate buffer has {} values, expected k*d = {}",
                coords.len(),
                k * d
            )));
        }
        if let Some(pos) = coords.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { point: pos / d, axis: pos % d });
        }
        if let Some(w) = &weights {
            if w.len() != k {
                return Err(Error::SizeMismatch { expected: k, got: w.len() });
            }
            if w.iter().sum::<u64>() == 0 {
                return Err(Error::ZeroTotalWeight);
            }
        }
        Ok(Self { k, d, coords, weights })
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn point(&self, j: usize) -> &[f64] {
        &self.coords[j * self.d..(j + 1) * self.d]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.d)
    }

    /// Row-major `k x d` coordinate buffer.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weights(&self) -> Option<&[u64]> {
        self.weights.as_deref()
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    pub fn total_weight(&self) -> Option<u64> {
        self.weights.as_ref().map(|w| w.iter().sum())
    }

    pub fn to_points(&self) -> Vec<Vec<f64>> {
        self.points().map(<[f64]>::to_vec).collect()
    }

    /// Same pattern with point `j` moved to position `perm[j]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.k {
            return Err(Error::SizeMismatch { expected: self.k, got: perm.len() });
        }
        let mut coords = vec![0.0; self.coords.len()];
        let mut weights = self.weights.as_ref().map(|_| vec![0u64; self.k]);
        let mut seen = vec![false; self.k];
        for (j, &to) in perm.iter().enumerate() {
            if to >= self.k || std::mem::replace(&mut seen[to], true) {
                return Err(Error::invalid("perm", "not a permutation"));
            }
            coords[to * self.d..(to + 1) * self.d].copy_from_slice(self.point(j));
            if let (Some(dst), Some(src)) = (weights.as_mut(), self.weights.as_ref()) {
                dst[to] = src[j];
            }
        }
        Ok(Self { k: self.k, d: self.d, coords, weights })
    }

    pub(crate) fn with_coords(&self, coords: Vec<f64>) -> Result<Self> {
        Self::from_flat(self.k, self.d, coords, self.weights.clone())
    }

    /// Checks that `other` has the same `k`, `d` and total weight.
    pub fn check_compatible(&self, other: &Pattern) -> Result<()> {
        if self.k != other.k {
            return Err(Error::SizeMismatch { expected: self.k, got: other.k });
        }
        if self.d != other.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: other.d });
        }
        match (self.total_weight(), other.total_weight()) {
            (Some(a), Some(b)) if a != b => Err(Error::WeightMismatch { left: a, right: b }),
            (Some(_), None) | (None, Some(_)) => Err(Error::Weightedness {
                needed: if self.is_weighted() { "weighted" } else { "unweighted" },
                found: if other.is_weighted() { "weighted" } else { "unweighted" },
            }),
            _ => Ok(()),
        }
    }
}

fn flatten(points: Vec<Vec<f64>>) -> Result<(usize, usize, Vec<f64>)> {
    let k = points.len();
    let d = points.first().map_or(0, Vec::len);
    let mut coords = Vec::with_capacity(k * d);
    for p in points {
        if p.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: p.len() });
        }
        coords.extend(p);
    }
    Ok((k, d, coords))
}

#[derive(Debug, Clone)]
pub struct Instance {
    patterns: Vec<Pattern>,
    pattern_weights: Vec<f64>,
    k: usize,
    d: usize,
    total_weight: Option<u64>,
    fingerprint: OnceLock<u64>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.patterns == other.patterns && self.pattern_weights == other.pattern_weights
    }
}

impl Instance {
    /// Instance with every pattern multiplier equal to 1.
    pub fn new(patterns: Vec<Pattern>) -> Result<Self> {
        let n = patterns.len();
        Self::with_pattern_weights(patterns, vec![1.0; n])
    }

    pub fn with_pattern_weights(patterns: Vec<Pattern>, pattern_weights: Vec<f64>) -> Result<Self> {
        let first = patterns.first().ok_or(Error::Empty("instance has no patterns"))?;
        if pattern_weights.len() != patterns.len() {
            return Err(Error::SizeMismatch { expected: patterns.len(), got: pattern_weights.len() });
        }
        if pattern_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("pattern_weights", "must be finite and non-negative"));
        }
        for p in &patterns[1..] {
            first.check_compatible(p)?;
        }
        Ok(Self {
            k: first.k,
            d: first.d,
            total_weight: first.total_weight(),
            patterns,
            pattern_weights,
            fingerprint: OnceLock::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.patterns.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn total_weight(&self) -> Option<u64> {
        self.total_weight
    }

    pub fn is_weighted(&self) -> bool {
        self.total_weight.is_some()
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn pattern(&self, i: usize) -> &Pattern {
        &self.patterns[i]
    }

    pub fn pattern_weights(&self) -> &[f64] {
        &self.pattern_weights
    }

    pub fn has_unit_weights(&self) -> bool {
        self.pattern_weights.iter().all(|&w| w == 1.0)
    }

    /// FNV-1a 64 of the canonical pattern-file serialization, computed once.
    pub fn fingerprint(&self) -> u64 {
        *self.fingerprint.get_or_init(|| crate::io::fingerprint(self))
    }

    /// Checks that a candidate prototype fits this instance.
    pub fn check_prototype(&self, q: &Prototype) -> Result<()> {
        self.patterns[0].check_compatible(q)
    }
}
