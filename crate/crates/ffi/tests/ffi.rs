use std::ffi::{CStr, CString};
use std::ptr;

use protoset_ffi::*;

fn last_error() -> String {
    let p = protoset_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn line_instance() -> *mut ProtosetInstance {
    // Three patterns of two points on the line.
    let coords = [0.0, 4.0, 5.0, 1.0, 2.0, 3.0];
    let mut inst = ptr::null_mut();
    assert_eq!(protoset_instance_new(3, 2, 1, coords.as_ptr(), ptr::null(), &mut inst), ProtosetStatus::Ok);
    inst
}

#[test]
fn match_cost_and_permutation() {
    let a = [0.0, 0.0, 1.0, 1.0];
    let b = [1.0, 1.0, 0.0, 0.0];
    let mut cost = -1.0;
    let mut perm = [9usize; 2];
    let st = protoset_match_cost(2, 2, a.as_ptr(), b.as_ptr(), ProtosetMetric::SquaredL2, &mut cost, perm.as_mut_ptr());
    assert_eq!(st, ProtosetStatus::Ok);
    assert_eq!(cost, 0.0);
    assert_eq!(perm, [1, 0]);
}

#[test]
fn emd_flow_is_integral() {
    let a = [0.0, 1.0];
    let b = [0.0, 1.0];
    let (wa, wb) = ([2u64, 1], [1u64, 2]);
    let mut cost = 0.0;
    let mut flow = [0u64; 4];
    let st = protoset_emd(
        2,
        1,
        a.as_ptr(),
        wa.as_ptr(),
        b.as_ptr(),
        wb.as_ptr(),
        ProtosetMetric::Emd2,
        &mut cost,
        flow.as_mut_ptr(),
    );
    assert_eq!(st, ProtosetStatus::Ok);
    assert_eq!(cost, 1.0);
    assert_eq!(flow, [1, 1, 0, 1]);
}

#[test]
fn errors_are_reported() {
    let a = [0.0, 1.0];
    let mut cost = 0.0;
    let st = protoset_match_cost(2, 1, a.as_ptr(), ptr::null(), ProtosetMetric::L1, &mut cost, ptr::null_mut());
    assert_eq!(st, ProtosetStatus::NullPointer);
    assert!(last_error().contains("null"));

    let (wa, wb) = ([1u64, 1], [1u64, 2]);
    let st = protoset_emd(2, 1, a.as_ptr(), wa.as_ptr(), a.as_ptr(), wb.as_ptr(), ProtosetMetric::Emd1, &mut cost, ptr::null_mut());
    assert_eq!(st, ProtosetStatus::DataError);
    assert!(last_error().contains("weight"));

    let bad = [f64::NAN, 1.0];
    let st = protoset_match_cost(2, 1, bad.as_ptr(), a.as_ptr(), ProtosetMetric::L1, &mut cost, ptr::null_mut());
    assert_eq!(st, ProtosetStatus::DataError);

    let name = CString::new("cosine").unwrap();
    let mut m = ProtosetMetric::L1;
    assert_eq!(protoset_metric_from_name(name.as_ptr(), &mut m), ProtosetStatus::InvalidArgument);
    let name = CString::new("emd2").unwrap();
    assert_eq!(protoset_metric_from_name(name.as_ptr(), &mut m), ProtosetStatus::Ok);
    assert_eq!(m, ProtosetMetric::Emd2);
}

#[test]
fn instance_shape_and_objective() {
    let inst = line_instance();
    let (mut n, mut k, mut d, mut w) = (0, 0, 0, 7);
    assert_eq!(protoset_instance_shape(inst, &mut n, &mut k, &mut d, &mut w), ProtosetStatus::Ok);
    assert_eq!((n, k, d, w), (3, 2, 1, 0));

    // Q = {1, 4}: costs 1+0, 0+1, 1+1.
    let q = [1.0, 4.0];
    let mut obj = 0.0;
    assert_eq!(protoset_objective(inst, q.as_ptr(), ptr::null(), ProtosetMetric::SquaredL2, &mut obj), ProtosetStatus::Ok);
    assert_eq!(obj, 4.0);
    protoset_instance_free(inst);
    protoset_instance_free(ptr::null_mut());
}

#[test]
fn coreset_and_solve() {
    let inst = line_instance();
    let mut cs = ptr::null_mut();
    assert_eq!(protoset_coreset_build(inst, ProtosetMetric::SquaredL2, 4, 3.0, 3, 11, &mut cs), ProtosetStatus::Ok);
    let mut len = 0;
    assert_eq!(protoset_coreset_len(cs, &mut len), ProtosetStatus::Ok);
    assert_eq!(len, 4);
    let (mut t, mut pivot) = (0.0, 99);
    assert_eq!(protoset_coreset_summary(cs, &mut t, &mut pivot), ProtosetStatus::Ok);
    assert!(pivot < 3 && t > 0.0);
    for i in 0..len {
        let (mut idx, mut w) = (0, 0.0);
        assert_eq!(protoset_coreset_entry(cs, i, &mut idx, &mut w), ProtosetStatus::Ok);
        assert!(idx < 3 && w > 0.0);
    }
    let (mut idx, mut w) = (0, 0.0);
    assert_eq!(protoset_coreset_entry(cs, len, &mut idx, &mut w), ProtosetStatus::InvalidArgument);

    let mut q = [0.0; 2];
    let mut obj = 0.0;
    let st = protoset_solve(inst, ptr::null(), ProtosetMetric::SquaredL2, 3, 100, 1e-9, 5, q.as_mut_ptr(), ptr::null_mut(), &mut obj);
    assert_eq!(st, ProtosetStatus::Ok);
    let mut check = 0.0;
    protoset_objective(inst, q.as_ptr(), ptr::null(), ProtosetMetric::SquaredL2, &mut check);
    assert_eq!(obj, check);

    let st = protoset_solve(inst, cs, ProtosetMetric::SquaredL2, 3, 100, 1e-9, 5, q.as_mut_ptr(), ptr::null_mut(), &mut obj);
    assert_eq!(st, ProtosetStatus::Ok);
    protoset_coreset_free(cs);
    protoset_instance_free(inst);
}

#[test]
fn files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let inst = line_instance();
    let path = CString::new(dir.path().join("p.jsonl").to_str().unwrap()).unwrap();
    assert_eq!(protoset_instance_save(inst, path.as_ptr()), ProtosetStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(protoset_instance_load(path.as_ptr(), &mut back), ProtosetStatus::Ok);
    let (mut a, mut b) = (0, 1);
    protoset_instance_fingerprint(inst, &mut a);
    protoset_instance_fingerprint(back, &mut b);
    assert_eq!(a, b);

    let mut cs = ptr::null_mut();
    assert_eq!(protoset_coreset_build(inst, ProtosetMetric::L1, 2, 3.0, 1, 1, &mut cs), ProtosetStatus::Ok);
    let cpath = CString::new(dir.path().join("c.jsonl").to_str().unwrap()).unwrap();
    assert_eq!(protoset_coreset_save(cs, cpath.as_ptr()), ProtosetStatus::Ok);
    let mut cs2 = ptr::null_mut();
    assert_eq!(protoset_coreset_load(cpath.as_ptr(), &mut cs2), ProtosetStatus::Ok);
    let mut len = 0;
    protoset_coreset_len(cs2, &mut len);
    assert_eq!(len, 2);

    let missing = CString::new(dir.path().join("nope.jsonl").to_str().unwrap()).unwrap();
    let mut none = ptr::null_mut();
    assert_eq!(protoset_instance_load(missing.as_ptr(), &mut none), ProtosetStatus::IoError);
    assert!(none.is_null());

    protoset_coreset_free(cs);
    protoset_coreset_free(cs2);
    protoset_instance_free(inst);
    protoset_instance_free(back);
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/protoset.h")).unwrap();
    for name in [
        "protoset_last_error",
        "protoset_match_cost",
        "protoset_emd",
        "protoset_instance_new",
        "protoset_instance_load",
        "protoset_instance_free",
        "protoset_coreset_build",
        "protoset_coreset_entry",
        "protoset_coreset_free",
        "protoset_solve",
        "protoset_objective",
        "typedef struct ProtosetInstance ProtosetInstance",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
