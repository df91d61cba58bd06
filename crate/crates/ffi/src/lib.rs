//! C ABI over `protoset`.
//!
//! Instances and coresets cross the boundary as opaque handles that the
//! caller releases with the matching `_free` function. Every call returns a
//! [`ProtosetStatus`]; on failure [`protoset_last_error`] describes the
//! problem for the calling thread. Point sets are passed as row-major
//! `double` buffers, point weights as `uint64_t` buffers (NULL when
//! unweighted).
//!
//! Null pointers are rejected with `NULL_POINTER`. Any other pointer must be
//! valid for the length implied by the other arguments, and handles must come
//! from this library and not be used after they are freed.

#![allow(clippy::not_unsafe_ptr_arg_deref)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use protoset::coreset::{self, Coreset, CostMode};
use protoset::prototype::{self, SolverConfig};
use protoset::seed::substream;
use protoset::{io, matching, Error, Instance, Metric, Pattern};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtosetStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DataError = 3,
    NumericalError = 4,
    IoError = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtosetMetric {
    SquaredL2 = 0,
    L1 = 1,
    Emd1 = 2,
    Emd2 = 3,
}

impl From<ProtosetMetric> for Metric {
    fn from(m: ProtosetMetric) -> Metric {
        match m {
            ProtosetMetric::SquaredL2 => Metric::SquaredL2,
            ProtosetMetric::L1 => Metric::L1,
            ProtosetMetric::Emd1 => Metric::Emd1,
            ProtosetMetric::Emd2 => Metric::Emd2,
        }
    }
}

/// Opaque instance handle.
pub struct ProtosetInstance {
    inner: Instance,
}

/// Opaque coreset handle.
pub struct ProtosetCoreset {
    inner: Coreset,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ProtosetStatus {
    match e {
        Error::Io(_) => ProtosetStatus::IoError,
        Error::Numerical(_) => ProtosetStatus::NumericalError,
        Error::InvalidParameter { .. } | Error::Config(_) | Error::UnsupportedMetric { .. } | Error::TooLarge { .. } => {
            ProtosetStatus::InvalidArgument
        }
        _ => ProtosetStatus::DataError,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ProtosetStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ProtosetStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            ProtosetStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            ProtosetStatus::Panic
        }
    }
}

fn nonnull<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    // SAFETY: callers pass either NULL or a pointer to a live value.
    unsafe { p.as_ref() }.ok_or(Fail::Null(what))
}

fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    // SAFETY: callers pass either NULL or a writable location.
    unsafe { p.as_mut() }.ok_or(Fail::Null(what))
}

fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    // SAFETY: the caller guarantees `len` readable elements at `p`.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

fn slice_mut<'a, T>(p: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    // SAFETY: the caller guarantees `len` writable elements at `p`.
    Ok(unsafe { std::slice::from_raw_parts_mut(p, len) })
}

fn opt_weights(p: *const u64, k: usize) -> Option<Vec<u64>> {
    // SAFETY: non-NULL weight buffers hold `k` elements.
    (!p.is_null()).then(|| unsafe { std::slice::from_raw_parts(p, k) }.to_vec())
}

fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(Fail::Null("path"));
    }
    // SAFETY: `p` is a NUL-terminated string owned by the caller.
    let s = unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Fail::Lib(Error::Config("path is not valid UTF-8".into())))?;
    Ok(Path::new(s))
}

fn pattern_arg(k: usize, d: usize, coords: *const f64, weights: *const u64) -> Result<Pattern, Fail> {
    let c = slice(coords, k.saturating_mul(d), "coords")?;
    Ok(Pattern::from_flat(k, d, c.to_vec(), opt_weights(weights, k))?)
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn protoset_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Parses `sq`, `l1`, `emd1` or `emd2`.
#[no_mangle]
pub extern "C" fn protoset_metric_from_name(name: *const c_char, out_metric: *mut ProtosetMetric) -> ProtosetStatus {
    guard(|| {
        let name = path_arg(name)?.to_str().unwrap_or_default();
        let m: Metric = name.parse()?;
        *out(out_metric, "out_metric")? = match m {
            Metric::SquaredL2 => ProtosetMetric::SquaredL2,
            Metric::L1 => ProtosetMetric::L1,
            Metric::Emd1 => ProtosetMetric::Emd1,
            Metric::Emd2 => ProtosetMetric::Emd2,
        };
        Ok(())
    })
}

/// Exact matching cost of two unweighted `k x d` point sets.
/// `out_perm` (may be NULL) receives `k` entries: point `j` of `a` matches
/// point `out_perm[j]` of `b`.
#[no_mangle]
pub extern "C" fn protoset_match_cost(
    k: usize,
    d: usize,
    a: *const f64,
    b: *const f64,
    metric: ProtosetMetric,
    out_cost: *mut f64,
    out_perm: *mut usize,
) -> ProtosetStatus {
    guard(|| {
        let pa = pattern_arg(k, d, a, std::ptr::null())?;
        let pb = pattern_arg(k, d, b, std::ptr::null())?;
        let res = matching::match_cost(&pa, &pb, metric.into())?;
        *out(out_cost, "out_cost")? = res.cost;
        if !out_perm.is_null() {
            slice_mut(out_perm, k, "out_perm")?.copy_from_slice(&res.permutation);
        }
        Ok(())
    })
}

/// Earth mover's distance between two weighted point sets of equal total
/// weight. `out_flow` (may be NULL) receives the row-major `k x k` flow.
#[no_mangle]
pub extern "C" fn protoset_emd(
    k: usize,
    d: usize,
    a: *const f64,
    a_weights: *const u64,
    b: *const f64,
    b_weights: *const u64,
    metric: ProtosetMetric,
    out_cost: *mut f64,
    out_flow: *mut u64,
) -> ProtosetStatus {
    guard(|| {
        nonnull(a_weights, "a_weights")?;
        nonnull(b_weights, "b_weights")?;
        let pa = pattern_arg(k, d, a, a_weights)?;
        let pb = pattern_arg(k, d, b, b_weights)?;
        let res = matching::emd(&pa, &pb, metric.into())?;
        *out(out_cost, "out_cost")? = res.cost;
        if !out_flow.is_null() {
            slice_mut(out_flow, k * k, "out_flow")?.copy_from_slice(&res.flow);
        }
        Ok(())
    })
}

/// Builds an instance of `n` patterns from `n*k*d` coordinates and, for
/// weighted data, `n*k` point weights.
#[no_mangle]
pub extern "C" fn protoset_instance_new(
    n: usize,
    k: usize,
    d: usize,
    coords: *const f64,
    weights: *const u64,
    out_instance: *mut *mut ProtosetInstance,
) -> ProtosetStatus {
    guard(|| {
        let slot = out(out_instance, "out_instance")?;
        let per = k.checked_mul(d).ok_or(Error::Config("k*d overflows".into()))?;
        let all = slice(coords, n.checked_mul(per).ok_or(Error::Config("n*k*d overflows".into()))?, "coords")?;
        let w = if weights.is_null() { None } else { Some(slice(weights, n * k, "weights")?) };
        let mut patterns = Vec::with_capacity(n);
        for i in 0..n {
            let pw = w.map(|w| w[i * k..(i + 1) * k].to_vec());
            patterns.push(Pattern::from_flat(k, d, all[i * per..(i + 1) * per].to_vec(), pw)?);
        }
        let inner = Instance::new(patterns)?;
        *slot = Box::into_raw(Box::new(ProtosetInstance { inner }));
        Ok(())
    })
}

/// Reads a pattern file.
#[no_mangle]
pub extern "C" fn protoset_instance_load(path: *const c_char, out_instance: *mut *mut ProtosetInstance) -> ProtosetStatus {
    guard(|| {
        let slot = out(out_instance, "out_instance")?;
        let inner = io::load_patterns(path_arg(path)?)?;
        *slot = Box::into_raw(Box::new(ProtosetInstance { inner }));
        Ok(())
    })
}

/// Writes a pattern file (atomically).
#[no_mangle]
pub extern "C" fn protoset_instance_save(instance: *const ProtosetInstance, path: *const c_char) -> ProtosetStatus {
    guard(|| {
        let inst = nonnull(instance, "instance")?;
        io::save_patterns(&inst.inner, path_arg(path)?)?;
        Ok(())
    })
}

/// `n`, `k`, `d` and total point weight (0 when unweighted).
#[no_mangle]
pub extern "C" fn protoset_instance_shape(
    instance: *const ProtosetInstance,
    out_n: *mut usize,
    out_k: *mut usize,
    out_d: *mut usize,
    out_total_weight: *mut u64,
) -> ProtosetStatus {
    guard(|| {
        let inst = &nonnull(instance, "instance")?.inner;
        *out(out_n, "out_n")? = inst.n();
        *out(out_k, "out_k")? = inst.k();
        *out(out_d, "out_d")? = inst.d();
        *out(out_total_weight, "out_total_weight")? = inst.total_weight().unwrap_or(0);
        Ok(())
    })
}

/// FNV-1a 64 fingerprint of the instance's canonical pattern file.
#[no_mangle]
pub extern "C" fn protoset_instance_fingerprint(instance: *const ProtosetInstance, out_fp: *mut u64) -> ProtosetStatus {
    guard(|| {
        *out(out_fp, "out_fp")? = nonnull(instance, "instance")?.inner.fingerprint();
        Ok(())
    })
}

/// Releases an instance; NULL is ignored.
#[no_mangle]
pub extern "C" fn protoset_instance_free(instance: *mut ProtosetInstance) {
    if !instance.is_null() {
        // SAFETY: the handle came from `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(instance) });
    }
}

/// Picks a pivot out of `trials` random patterns, computes exact
/// sensitivities and samples `r` weighted patterns.
#[no_mangle]
pub extern "C" fn protoset_coreset_build(
    instance: *const ProtosetInstance,
    metric: ProtosetMetric,
    r: usize,
    alpha: f64,
    trials: usize,
    seed: u64,
    out_coreset: *mut *mut ProtosetCoreset,
) -> ProtosetStatus {
    guard(|| {
        let slot = out(out_coreset, "out_coreset")?;
        let inst = &nonnull(instance, "instance")?.inner;
        let (profile, _) = coreset::pivot_profile(
            inst,
            trials,
            alpha,
            metric.into(),
            CostMode::Exact,
            &mut substream(seed, "coreset-pivot", 0),
        )?;
        let mut inner = coreset::sample_coreset(&profile, r, &mut substream(seed, "coreset-sample", 0))?;
        inner.seed = Some(seed);
        *slot = Box::into_raw(Box::new(ProtosetCoreset { inner }));
        Ok(())
    })
}

/// Reads a coreset sidecar file.
#[no_mangle]
pub extern "C" fn protoset_coreset_load(path: *const c_char, out_coreset: *mut *mut ProtosetCoreset) -> ProtosetStatus {
    guard(|| {
        let slot = out(out_coreset, "out_coreset")?;
        let inner = io::load_coreset(path_arg(path)?)?;
        *slot = Box::into_raw(Box::new(ProtosetCoreset { inner }));
        Ok(())
    })
}

/// Writes a coreset sidecar file (atomically).
#[no_mangle]
pub extern "C" fn protoset_coreset_save(coreset: *const ProtosetCoreset, path: *const c_char) -> ProtosetStatus {
    guard(|| {
        io::save_coreset(&nonnull(coreset, "coreset")?.inner, path_arg(path)?)?;
        Ok(())
    })
}

/// Number of sampled entries (repeats included).
#[no_mangle]
pub extern "C" fn protoset_coreset_len(coreset: *const ProtosetCoreset, out_len: *mut usize) -> ProtosetStatus {
    guard(|| {
        *out(out_len, "out_len")? = nonnull(coreset, "coreset")?.inner.entries.len();
        Ok(())
    })
}

/// Pattern index and weight of entry `i`.
#[no_mangle]
pub extern "C" fn protoset_coreset_entry(
    coreset: *const ProtosetCoreset,
    i: usize,
    out_index: *mut usize,
    out_weight: *mut f64,
) -> ProtosetStatus {
    guard(|| {
        let cs = &nonnull(coreset, "coreset")?.inner;
        let e = cs
            .entries
            .get(i)
            .ok_or_else(|| Error::Config(format!("entry {i} out of range for {} entries", cs.entries.len())))?;
        *out(out_index, "out_index")? = e.index;
        *out(out_weight, "out_weight")? = e.weight;
        Ok(())
    })
}

/// Sum of the sensitivity upper bounds `T` and the pivot index.
#[no_mangle]
pub extern "C" fn protoset_coreset_summary(
    coreset: *const ProtosetCoreset,
    out_total_sensitivity: *mut f64,
    out_pivot: *mut usize,
) -> ProtosetStatus {
    guard(|| {
        let cs = &nonnull(coreset, "coreset")?.inner;
        *out(out_total_sensitivity, "out_total_sensitivity")? = cs.t_sum;
        *out(out_pivot, "out_pivot")? = cs.pivot;
        Ok(())
    })
}

/// Releases a coreset; NULL is ignored.
#[no_mangle]
pub extern "C" fn protoset_coreset_free(coreset: *mut ProtosetCoreset) {
    if !coreset.is_null() {
        // SAFETY: the handle came from `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(coreset) });
    }
}

/// Alternating minimization from the best of `trials` random patterns,
/// on the coreset when `coreset` is non-NULL. Writes `k*d` coordinates,
/// `k` weights (weighted data, may be NULL) and the full-data objective.
#[allow(clippy::too_many_arguments)]
#[no_mangle]
pub extern "C" fn protoset_solve(
    instance: *const ProtosetInstance,
    coreset: *const ProtosetCoreset,
    metric: ProtosetMetric,
    trials: usize,
    max_rounds: usize,
    rel_tol: f64,
    seed: u64,
    out_coords: *mut f64,
    out_weights: *mut u64,
    out_objective: *mut f64,
) -> ProtosetStatus {
    guard(|| {
        let inst = &nonnull(instance, "instance")?.inner;
        let metric: Metric = metric.into();
        let target = if coreset.is_null() {
            None
        } else {
            // SAFETY: checked non-NULL above; points to a live handle.
            Some(unsafe { &*coreset }.inner.to_instance(inst)?)
        };
        let target = target.as_ref().unwrap_or(inst);
        let pivot = prototype::pick_init(target, trials, metric, &mut substream(seed, "solve-init", 0))?;
        let report = prototype::alternating_minimize(
            target,
            target.pattern(pivot.index),
            metric,
            SolverConfig { max_rounds, rel_tol },
        )?;
        let q = report.prototype;
        slice_mut(out_coords, q.k() * q.d(), "out_coords")?.copy_from_slice(q.coords());
        if let (false, Some(w)) = (out_weights.is_null(), q.weights()) {
            slice_mut(out_weights, q.k(), "out_weights")?.copy_from_slice(w);
        }
        if !out_objective.is_null() {
            *out(out_objective, "out_objective")? = prototype::objective(inst, &q, metric)?;
        }
        Ok(())
    })
}

/// Objective `sum_i M(P_i, Q)` of the `k x d` candidate `q` (with `k`
/// weights for weighted data).
#[no_mangle]
pub extern "C" fn protoset_objective(
    instance: *const ProtosetInstance,
    q: *const f64,
    q_weights: *const u64,
    metric: ProtosetMetric,
    out_objective: *mut f64,
) -> ProtosetStatus {
    guard(|| {
        let inst = &nonnull(instance, "instance")?.inner;
        let q = pattern_arg(inst.k(), inst.d(), q, q_weights)?;
        *out(out_objective, "out_objective")? = prototype::objective(inst, &q, metric.into())?;
        Ok(())
    })
}
