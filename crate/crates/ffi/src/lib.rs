//! C ABI over the mprisk engine.
//!
//! Networks live behind the opaque `MprHin` handle. Every fallible call
//! returns an `MprStatus`; on failure `mpr_last_error` describes the cause
//! for the calling thread. Strings handed out by the library must be
//! released with `mpr_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use mprisk::creditmodel::chi2_sf_1;
use mprisk::evalharness::{candidate_paths, infer_risk, roc_auc, EvalConfig, EvalError};
use mprisk::hin::{default_sme_schema, load_hin, Hin, HinSources, LoadOptions};
use mprisk::mpfeatures::{feature_value, FeatureError, FeatureSpec, HeteSimEngine, RiskMap};
use mprisk::synthgen::{generate, GenConfig};

#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MprStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    DataError = 3,
    NumericalError = 4,
    InternalError = 5,
    UnknownNode = 6,
    InvalidFeature = 7,
    /// The feature is undefined for this node (no path instances or a zero
    /// denominator); the output is left untouched.
    MissingValue = 8,
    InvalidArgument = 9,
}

/// Opaque network handle with its current risk assignment.
pub struct MprHin {
    hin: Hin,
    risk: RiskMap,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: MprStatus, msg: impl Into<String>) -> MprStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning panics into `InternalError`.
fn guard(f: impl FnOnce() -> MprStatus) -> MprStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(MprStatus::InternalError, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, MprStatus> {
    if p.is_null() {
        return Err(fail(MprStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(MprStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn boxed(hin: Hin, out: *mut *mut MprHin) -> MprStatus {
    let risk = RiskMap::from_labels(&hin);
    unsafe { *out = Box::into_raw(Box::new(MprHin { hin, risk })) };
    MprStatus::Ok
}

/// Loads `nodes.csv`, `edges.csv` and the optional `attributes.csv` and
/// `labels.csv` from `dir` over the default SME schema.
///
/// # Safety
/// `dir` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mpr_hin_load(dir: *const c_char, out: *mut *mut MprHin) -> MprStatus {
    guard(|| {
        if out.is_null() {
            return fail(MprStatus::NullArgument, "out is null");
        }
        let dir = match str_arg(dir, "dir") {
            Ok(d) => d,
            Err(s) => return s,
        };
        let loaded = HinSources::from_dir(Path::new(dir)).and_then(|src| load_hin(default_sme_schema(), &src, LoadOptions::default()));
        match loaded {
            Ok(hin) => boxed(hin, out),
            Err(e) => fail(MprStatus::DataError, e.to_string()),
        }
    })
}

/// Generates a synthetic network of roughly `total_nodes` nodes.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mpr_hin_synthetic(seed: u64, total_nodes: usize, out: *mut *mut MprHin) -> MprStatus {
    guard(|| {
        if out.is_null() {
            return fail(MprStatus::NullArgument, "out is null");
        }
        let cfg = GenConfig {
            seed,
            ..GenConfig::with_total_nodes(total_nodes)
        };
        match generate(&cfg) {
            Ok((hin, _)) => boxed(hin, out),
            Err(e) => fail(MprStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `hin` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mpr_hin_free(hin: *mut MprHin) {
    if !hin.is_null() {
        drop(Box::from_raw(hin));
    }
}

/// # Safety
/// `hin` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn mpr_hin_node_count(hin: *const MprHin) -> usize {
    hin.as_ref().map_or(0, |h| h.hin.node_count())
}

/// # Safety
/// `hin` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn mpr_hin_edge_count(hin: *const MprHin) -> usize {
    hin.as_ref().map_or(0, |h| h.hin.edge_count())
}

/// Fits the Naive Bayes risk models and imputes unlabeled nodes whose
/// posterior exceeds `threshold`. Later feature calls use the result.
///
/// # Safety
/// `hin` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpr_hin_infer_risk(hin: *mut MprHin, alpha: f64, threshold: f64) -> MprStatus {
    guard(|| {
        let Some(h) = hin.as_mut() else {
            return fail(MprStatus::NullArgument, "hin is null");
        };
        match infer_risk(&h.hin, alpha, threshold) {
            Ok(stage) => {
                h.hin = stage.imputed;
                h.risk = stage.risk;
                MprStatus::Ok
            }
            Err(EvalError::Bayes(e)) => fail(MprStatus::InvalidArgument, e.to_string()),
            Err(e) => fail(MprStatus::DataError, e.to_string()),
        }
    })
}

/// One feature cell. `feature` is `<meta path>@<kind>`, for example
/// `E-[control]->P@hetesim`.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn mpr_feature(hin: *const MprHin, node_id: *const c_char, feature: *const c_char, out: *mut f64) -> MprStatus {
    guard(|| {
        let Some(h) = hin.as_ref() else {
            return fail(MprStatus::NullArgument, "hin is null");
        };
        if out.is_null() {
            return fail(MprStatus::NullArgument, "out is null");
        }
        let (id, name) = match (str_arg(node_id, "node_id"), str_arg(feature, "feature")) {
            (Ok(i), Ok(f)) => (i, f),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let Some(x) = h.hin.node_idx(id) else {
            return fail(MprStatus::UnknownNode, format!("no node `{id}`"));
        };
        let spec = match FeatureSpec::parse(name, h.hin.schema()) {
            Ok(s) => s,
            Err(e) => return fail(MprStatus::InvalidFeature, e.to_string()),
        };
        let engine = HeteSimEngine::new(&h.hin);
        match feature_value(&engine, x, &spec, &h.risk) {
            Ok(v) => {
                *out = v;
                MprStatus::Ok
            }
            Err(e @ FeatureError::TypeMismatch) => fail(MprStatus::InvalidFeature, e.to_string()),
            Err(e) if e.is_missing() => fail(MprStatus::MissingValue, e.to_string()),
            Err(e) => fail(MprStatus::InvalidFeature, e.to_string()),
        }
    })
}

/// Candidate meta paths from enterprises, newline separated, shortest
/// first. Free the result with `mpr_string_free`.
///
/// # Safety
/// `hin` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mpr_candidate_paths(hin: *const MprHin, max_relations: usize, cap: usize, out: *mut *mut c_char) -> MprStatus {
    guard(|| {
        let Some(h) = hin.as_ref() else {
            return fail(MprStatus::NullArgument, "hin is null");
        };
        if out.is_null() {
            return fail(MprStatus::NullArgument, "out is null");
        }
        let cfg = EvalConfig {
            max_relations,
            candidate_cap: cap,
            ..EvalConfig::default()
        };
        let text: Vec<String> = candidate_paths(&h.hin, &cfg).iter().map(|p| p.format(h.hin.schema())).collect();
        match CString::new(text.join("\n")) {
            Ok(s) => {
                *out = s.into_raw();
                MprStatus::Ok
            }
            Err(_) => fail(MprStatus::InternalError, "path text contains NUL"),
        }
    })
}

/// ROC AUC of `scores` against 0/1 `labels`.
///
/// # Safety
/// `scores` and `labels` must point to `n` elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mpr_roc_auc(scores: *const f64, labels: *const u8, n: usize, out: *mut f64) -> MprStatus {
    guard(|| {
        if scores.is_null() || labels.is_null() || out.is_null() {
            return fail(MprStatus::NullArgument, "null array or output");
        }
        let s = std::slice::from_raw_parts(scores, n);
        let y: Vec<bool> = std::slice::from_raw_parts(labels, n).iter().map(|&l| l != 0).collect();
        match roc_auc(s, &y) {
            Ok(r) => {
                *out = r.auc;
                MprStatus::Ok
            }
            Err(e) => fail(MprStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Upper tail of the chi-square distribution with one degree of freedom.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mpr_chi2_sf_1(w: f64, out: *mut f64) -> MprStatus {
    guard(|| {
        if out.is_null() {
            return fail(MprStatus::NullArgument, "out is null");
        }
        if w.is_nan() || w < 0.0 {
            return fail(MprStatus::InvalidArgument, format!("statistic {w} is not a non-negative number"));
        }
        *out = chi2_sf_1(w).0;
        MprStatus::Ok
    })
}

/// Message for the last failure on this thread, or null. Valid until the
/// next library call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn mpr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn mpr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
