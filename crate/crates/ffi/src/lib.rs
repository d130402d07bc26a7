//! C ABI over `riskenv`.
//!
//! Trees, measures and generators are opaque handles created by the
//! `*_from_json` / `*_binomial` constructors and released with the matching
//! `*_free`. Every fallible call returns a [`RiskenvStatus`]; on failure the
//! message is available from [`riskenv_last_error`] on the same thread.
//! Strings returned through `char **` outputs are owned by the caller and
//! must be released with [`riskenv_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use riskenv::gexp::{g_risk, Generator};
use riskenv::measures::{check_axioms, Axiom, FalsifierConfig, RiskMeasureSpec};
use riskenv::space::{cond_expect, Profile, RandomVariable, ScenarioTree, TreeDocument};
use riskenv::RiskError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiskenvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Numeric = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Opaque scenario tree.
pub struct RiskenvTree(ScenarioTree);

/// Opaque risk measure.
pub struct RiskenvMeasure(RiskMeasureSpec);

/// Opaque BSDE generator.
pub struct RiskenvGenerator(Generator);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(RiskenvStatus, String);

impl From<RiskError> for Failure {
    fn from(e: RiskError) -> Self {
        let status = if e.is_numeric() { RiskenvStatus::Numeric } else { RiskenvStatus::InvalidInput };
        Failure(status, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure(RiskenvStatus::InvalidInput, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RiskenvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RiskenvStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside riskenv".into());
            RiskenvStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(RiskenvStatus::NullPointer, format!("null pointer: {what}"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(RiskenvStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn read_values(p: *const f64, len: usize) -> Result<RandomVariable, Failure> {
    if p.is_null() {
        return Err(null("values"));
    }
    Ok(RandomVariable::new(std::slice::from_raw_parts(p, len).to_vec())?)
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write_profile(p: &Profile, out: *mut f64, out_len: usize, written: *mut usize) -> Result<(), Failure> {
    if !written.is_null() {
        *written = p.len();
    }
    if out_len < p.len() {
        return Err(Failure(RiskenvStatus::BufferTooSmall, format!("output needs {} values, buffer holds {out_len}", p.len())));
    }
    if out.is_null() {
        return Err(null("out"));
    }
    ptr::copy_nonoverlapping(p.values().as_ptr(), out, p.len());
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = CString::new(s).map_err(|_| Failure(RiskenvStatus::InvalidInput, "string contains nul".into()))?.into_raw();
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn riskenv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn riskenv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Binomial tree with `steps` steps over `horizon`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn riskenv_tree_binomial(steps: usize, horizon: f64, out: *mut *mut RiskenvTree) -> RiskenvStatus {
    guard(|| put(out, RiskenvTree(ScenarioTree::binomial(steps, horizon)?)))
}

/// Tree from its JSON document form.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn riskenv_tree_from_json(json: *const c_char, out: *mut *mut RiskenvTree) -> RiskenvStatus {
    guard(|| {
        let doc: TreeDocument = serde_json::from_str(read_str(json, "json")?)?;
        put(out, RiskenvTree(ScenarioTree::from_document(&doc)?))
    })
}

/// # Safety
/// `tree` must come from a tree constructor and not have been freed. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn riskenv_tree_free(tree: *mut RiskenvTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Number of leaves, or 0 for NULL.
///
/// # Safety
/// `tree` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn riskenv_tree_leaf_count(tree: *const RiskenvTree) -> usize {
    tree.as_ref().map_or(0, |t| t.0.leaf_count())
}

/// Number of levels below the root, or 0 for NULL.
///
/// # Safety
/// `tree` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn riskenv_tree_depth(tree: *const RiskenvTree) -> usize {
    tree.as_ref().map_or(0, |t| t.0.depth())
}

/// Number of nodes at `level`, or 0 for NULL or an out-of-range level.
///
/// # Safety
/// `tree` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn riskenv_tree_node_count(tree: *const RiskenvTree, level: usize) -> usize {
    tree.as_ref().filter(|t| level <= t.0.depth()).map_or(0, |t| t.0.node_count(level))
}

/// Risk measure from its JSON spec, validated against `tree`.
///
/// # Safety
/// `json` must be NUL-terminated, `tree` live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn riskenv_measure_from_json(
    json: *const c_char,
    tree: *const RiskenvTree,
    out: *mut *mut RiskenvMeasure,
) -> RiskenvStatus {
    guard(|| {
        let spec: RiskMeasureSpec = serde_json::from_str(read_str(json, "json")?)?;
        spec.validate(&deref(tree, "tree")?.0)?;
        put(out, RiskenvMeasure(spec))
    })
}

/// # Safety
/// `m` must come from [`riskenv_measure_from_json`] and not have been freed. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn riskenv_measure_free(m: *mut RiskenvMeasure) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Evaluates `rho_t(X)` for leaf values `x[0..len]`. Writes one value per
/// level-`t` node to `out` and the count to `written` (also on
/// `BUFFER_TOO_SMALL`, so callers can size the buffer).
///
/// # Safety
/// Handles must be live; `x` must hold `len` values and `out` `out_len`.
#[no_mangle]
pub unsafe extern "C" fn riskenv_measure_evaluate(
    measure: *const RiskenvMeasure,
    tree: *const RiskenvTree,
    x: *const f64,
    len: usize,
    t: usize,
    out: *mut f64,
    out_len: usize,
    written: *mut usize,
) -> RiskenvStatus {
    guard(|| {
        let tree = &deref(tree, "tree")?.0;
        let p = deref(measure, "measure")?.0.evaluate(tree, &read_values(x, len)?, t)?;
        write_profile(&p, out, out_len, written)
    })
}

/// `E[X | F_t]` under the reference measure.
///
/// # Safety
/// As for [`riskenv_measure_evaluate`].
#[no_mangle]
pub unsafe extern "C" fn riskenv_cond_expect(
    tree: *const RiskenvTree,
    x: *const f64,
    len: usize,
    t: usize,
    out: *mut f64,
    out_len: usize,
    written: *mut usize,
) -> RiskenvStatus {
    guard(|| {
        let tree = &deref(tree, "tree")?.0;
        let p = cond_expect(tree, &read_values(x, len)?, t, None)?;
        write_profile(&p, out, out_len, written)
    })
}

/// Generator from its JSON spec, e.g. `{"name": "abs", "kappa": 0.5}`.
///
/// # Safety
/// `json` must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn riskenv_generator_from_json(json: *const c_char, out: *mut *mut RiskenvGenerator) -> RiskenvStatus {
    guard(|| {
        let g: Generator = serde_json::from_str(read_str(json, "json")?)?;
        g.validate()?;
        put(out, RiskenvGenerator(g))
    })
}

/// # Safety
/// `g` must come from [`riskenv_generator_from_json`] and not have been freed. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn riskenv_generator_free(g: *mut RiskenvGenerator) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// g-risk `E_g[-xi | F_t]` on a binomial tree.
///
/// # Safety
/// As for [`riskenv_measure_evaluate`].
#[no_mangle]
pub unsafe extern "C" fn riskenv_g_risk(
    generator: *const RiskenvGenerator,
    tree: *const RiskenvTree,
    xi: *const f64,
    len: usize,
    t: usize,
    out: *mut f64,
    out_len: usize,
    written: *mut usize,
) -> RiskenvStatus {
    guard(|| {
        let tree = &deref(tree, "tree")?.0;
        let p = g_risk(&deref(generator, "generator")?.0, tree, &read_values(xi, len)?, t)?;
        write_profile(&p, out, out_len, written)
    })
}

/// Runs the axiom falsifier for A1..A6 and returns the report as JSON.
///
/// # Safety
/// Handles must be live and `out_json` valid; free the result with
/// [`riskenv_string_free`].
#[no_mangle]
pub unsafe extern "C" fn riskenv_check_axioms_json(
    measure: *const RiskenvMeasure,
    tree: *const RiskenvTree,
    budget: usize,
    seed: u64,
    out_json: *mut *mut c_char,
) -> RiskenvStatus {
    guard(|| {
        let report = check_axioms(&deref(measure, "measure")?.0, &deref(tree, "tree")?.0, &Axiom::ALL, &FalsifierConfig::new(budget, seed));
        put_string(out_json, serde_json::to_string(&report)?)
    })
}
