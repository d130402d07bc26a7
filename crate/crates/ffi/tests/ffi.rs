use std::ffi::{CStr, CString};
use std::ptr;

use riskenv_ffi::*;

fn tree(steps: usize, horizon: f64) -> *mut RiskenvTree {
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { riskenv_tree_binomial(steps, horizon, &mut t) }, RiskenvStatus::Ok);
    t
}

fn measure(json: &str, t: *const RiskenvTree) -> *mut RiskenvMeasure {
    let j = CString::new(json).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { riskenv_measure_from_json(j.as_ptr(), t, &mut m) }, RiskenvStatus::Ok);
    m
}

fn last_error() -> String {
    let p = riskenv_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn tree_shape() {
    let t = tree(3, 1.0);
    unsafe {
        assert_eq!(riskenv_tree_leaf_count(t), 8);
        assert_eq!(riskenv_tree_depth(t), 3);
        assert_eq!(riskenv_tree_node_count(t, 2), 4);
        assert_eq!(riskenv_tree_node_count(t, 9), 0);
        assert_eq!(riskenv_tree_leaf_count(ptr::null()), 0);
        riskenv_tree_free(t);
        riskenv_tree_free(ptr::null_mut());
    }
}

#[test]
fn tree_from_document() {
    let json = CString::new(
        r#"{"kind": "explicit", "N": 1, "dt": 1.0, "nodes": [{"level": 0, "index": 0, "children": [0, 1, 2], "probs": [0.25, 0.25, 0.5]},
            {"level": 1, "index": 0}, {"level": 1, "index": 1}, {"level": 1, "index": 2}]}"#,
    )
    .unwrap();
    let mut t = ptr::null_mut();
    let status = unsafe { riskenv_tree_from_json(json.as_ptr(), &mut t) };
    assert_eq!(status, RiskenvStatus::Ok, "{}", if status == RiskenvStatus::Ok { String::new() } else { last_error() });
    let m = measure(r#"{"type": "conditional_var", "lambda": 0.3}"#, t);
    let x = [-1.0, 0.0, 1.0];
    let mut out = [f64::NAN];
    let mut n = 0;
    unsafe {
        assert_eq!(riskenv_measure_evaluate(m, t, x.as_ptr(), 3, 0, out.as_mut_ptr(), 1, &mut n), RiskenvStatus::Ok);
        riskenv_measure_free(m);
        riskenv_tree_free(t);
    }
    assert_eq!((n, out[0]), (1, 0.0));
}

#[test]
fn entropic_two_leaves() {
    let t = tree(1, 1.0);
    let m = measure(r#"{"type": "entropic", "gamma": 1.0}"#, t);
    let x = [0.0, -(3f64.ln())];
    let mut out = [0.0];
    let mut n = 0;
    unsafe {
        assert_eq!(riskenv_measure_evaluate(m, t, x.as_ptr(), 2, 0, out.as_mut_ptr(), 1, &mut n), RiskenvStatus::Ok);
        riskenv_measure_free(m);
        riskenv_tree_free(t);
    }
    assert!((out[0] - 2f64.ln()).abs() < 1e-12);
}

#[test]
fn buffer_too_small_reports_size() {
    let t = tree(2, 1.0);
    let x = [1.0, 2.0, 3.0, 4.0];
    let mut out = [0.0; 1];
    let mut n = 0;
    let s = unsafe { riskenv_cond_expect(t, x.as_ptr(), 4, 1, out.as_mut_ptr(), 1, &mut n) };
    assert_eq!(s, RiskenvStatus::BufferTooSmall);
    assert_eq!(n, 2);
    let mut out = [0.0; 2];
    let s = unsafe { riskenv_cond_expect(t, x.as_ptr(), 4, 1, out.as_mut_ptr(), 2, &mut n) };
    assert_eq!(s, RiskenvStatus::Ok);
    assert_eq!(out, [1.5, 3.5]);
    unsafe { riskenv_tree_free(t) };
}

#[test]
fn g_risk_one_step() {
    let t = tree(1, 0.04);
    let j = CString::new(r#"{"name": "abs", "kappa": 0.5}"#).unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { riskenv_generator_from_json(j.as_ptr(), &mut g) }, RiskenvStatus::Ok);
    let xi = [1.0, -1.0];
    let mut out = [0.0];
    let mut n = 0;
    unsafe {
        assert_eq!(riskenv_g_risk(g, t, xi.as_ptr(), 2, 0, out.as_mut_ptr(), 1, &mut n), RiskenvStatus::Ok);
        riskenv_generator_free(g);
        riskenv_tree_free(t);
    }
    assert!((out[0] - 0.1).abs() < 1e-12);
}

#[test]
fn errors_set_message() {
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { riskenv_tree_binomial(1, -1.0, &mut t) }, RiskenvStatus::InvalidInput);
    assert!(t.is_null());
    assert!(!last_error().is_empty());

    assert_eq!(unsafe { riskenv_tree_binomial(1, 1.0, ptr::null_mut()) }, RiskenvStatus::NullPointer);
    assert!(last_error().contains("null"));

    let t = tree(1, 1.0);
    let bad = CString::new(r#"{"type": "conditional_var", "lambda": 2.0}"#).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { riskenv_measure_from_json(bad.as_ptr(), t, &mut m) }, RiskenvStatus::InvalidInput);
    let wrong_len = [0.0; 3];
    let lin = measure(r#"{"type": "linear"}"#, t);
    let mut out = [0.0];
    let s = unsafe { riskenv_measure_evaluate(lin, t, wrong_len.as_ptr(), 3, 0, out.as_mut_ptr(), 1, ptr::null_mut()) };
    assert_eq!(s, RiskenvStatus::InvalidInput);
    let invalid = [0xff_u8, 0];
    let s = unsafe { riskenv_measure_from_json(invalid.as_ptr().cast(), t, &mut m) };
    assert_eq!(s, RiskenvStatus::InvalidUtf8);
    unsafe {
        riskenv_measure_free(lin);
        riskenv_tree_free(t);
    }
}

#[test]
fn axioms_report_json() {
    let t = tree(2, 1.0);
    let m = measure(r#"{"type": "linear"}"#, t);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { riskenv_check_axioms_json(m, t, 50, 3, &mut s) }, RiskenvStatus::Ok);
    let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe {
        riskenv_string_free(s);
        riskenv_measure_free(m);
        riskenv_tree_free(t);
    }
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["outcomes"].as_array().unwrap().len(), 6);
    assert!(v["outcomes"].as_array().unwrap().iter().all(|o| o["status"] == "pass"));
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/riskenv.h")).unwrap();
    for name in [
        "typedef struct RiskenvTree RiskenvTree;",
        "typedef struct RiskenvMeasure RiskenvMeasure;",
        "typedef struct RiskenvGenerator RiskenvGenerator;",
        "RISKENV_STATUS_BUFFER_TOO_SMALL = 5",
        "riskenv_tree_binomial(size_t steps, double horizon, struct RiskenvTree **out)",
        "riskenv_tree_from_json",
        "riskenv_tree_free",
        "riskenv_measure_from_json",
        "riskenv_measure_evaluate",
        "riskenv_cond_expect",
        "riskenv_g_risk",
        "riskenv_check_axioms_json",
        "riskenv_string_free",
        "const char *riskenv_last_error(void);",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
