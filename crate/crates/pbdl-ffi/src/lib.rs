//! C ABI for the pbdl library.
//!
//! Models are passed around as opaque handles; every fallible call returns a
//! [`PbdlStatus`] and writes its result through an out pointer. The message of
//! the most recent error on the calling thread is available through
//! [`pbdl_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::slice;

use pbdl::learn::{train_pbdl, QuadrupletSet, TrainConfig};
use pbdl::{Error, MaxAffineModel};

/// Result code of an FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PbdlStatus {
    PbdlOk = 0,
    /// A required pointer was null.
    PbdlNullPointer = 1,
    /// Malformed input (bad JSON, bad dimensions, bad arguments).
    PbdlInvalidArgument = 2,
    /// The optimizer failed or the trained program was infeasible.
    PbdlSolverFailure = 3,
}

/// Opaque learned divergence model.
pub struct PbdlModel {
    inner: MaxAffineModel,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(e: &Error) -> PbdlStatus {
    let msg = CString::new(e.to_string()).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg);
    match e {
        Error::Solver(_) | Error::InfeasibleInterpolant { .. } => PbdlStatus::PbdlSolverFailure,
        _ => PbdlStatus::PbdlInvalidArgument,
    }
}

/// Message of the most recent error on this thread. The pointer stays valid
/// until the next failing call on the same thread. Never null.
#[no_mangle]
pub extern "C" fn pbdl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Parse a model from its JSON form. On success writes a handle to `out`;
/// release it with [`pbdl_model_free`].
///
/// # Safety
/// `json` must be a valid NUL-terminated C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pbdl_model_from_json(
    json: *const c_char,
    out: *mut *mut PbdlModel,
) -> PbdlStatus {
    if json.is_null() || out.is_null() {
        return PbdlStatus::PbdlNullPointer;
    }
    let text = match CStr::from_ptr(json).to_str() {
        Ok(t) => t,
        Err(_) => {
            return set_error(&Error::InvalidArgument("model JSON is not valid UTF-8".into()))
        }
    };
    match MaxAffineModel::from_json(text) {
        Ok(model) => {
            *out = Box::into_raw(Box::new(PbdlModel { inner: model }));
            PbdlStatus::PbdlOk
        }
        Err(e) => set_error(&e),
    }
}

/// Serialize a model to JSON. The returned string must be released with
/// [`pbdl_string_free`].
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pbdl_model_to_json(
    model: *const PbdlModel,
    out: *mut *mut c_char,
) -> PbdlStatus {
    if model.is_null() || out.is_null() {
        return PbdlStatus::PbdlNullPointer;
    }
    match (*model).inner.to_json() {
        Ok(json) => match CString::new(json) {
            Ok(s) => {
                *out = s.into_raw();
                PbdlStatus::PbdlOk
            }
            Err(_) => set_error(&Error::InvalidArgument("JSON contained a NUL byte".into())),
        },
        Err(e) => set_error(&e),
    }
}

/// Input dimension of the model, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pbdl_model_dim(model: *const PbdlModel) -> usize {
    if model.is_null() {
        0
    } else {
        (*model).inner.dim
    }
}

/// Number of hyperplanes of the model, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pbdl_model_hyperplanes(model: *const PbdlModel) -> usize {
    if model.is_null() {
        0
    } else {
        (*model).inner.k
    }
}

/// Evaluate the convex generator at `x` (length `dim`).
///
/// # Safety
/// `model` must be a live handle, `x` must point to `dim` doubles, and `value`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pbdl_model_evaluate(
    model: *const PbdlModel,
    x: *const f64,
    dim: usize,
    value: *mut f64,
) -> PbdlStatus {
    if model.is_null() || x.is_null() || value.is_null() {
        return PbdlStatus::PbdlNullPointer;
    }
    let x = slice::from_raw_parts(x, dim);
    match (*model).inner.evaluate(x) {
        Ok((v, _)) => {
            *value = v;
            PbdlStatus::PbdlOk
        }
        Err(e) => set_error(&e),
    }
}

/// The learned divergence `D(x, y)` for two points of length `dim`.
///
/// # Safety
/// `model` must be a live handle, `x` and `y` must point to `dim` doubles,
/// and `value` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pbdl_model_divergence(
    model: *const PbdlModel,
    x: *const f64,
    y: *const f64,
    dim: usize,
    value: *mut f64,
) -> PbdlStatus {
    if model.is_null() || x.is_null() || y.is_null() || value.is_null() {
        return PbdlStatus::PbdlNullPointer;
    }
    let x = slice::from_raw_parts(x, dim);
    let y = slice::from_raw_parts(y, dim);
    match (*model).inner.divergence(x, y) {
        Ok(v) => {
            *value = v;
            PbdlStatus::PbdlOk
        }
        Err(e) => set_error(&e),
    }
}

/// Learn a divergence from relative comparisons.
///
/// `points` holds `n` rows of `dim` doubles in row-major order. `quads` holds
/// `m` quadruplets `(i, j, k, l)` of point indices, each asserting that point
/// `i` is closer to `j` than `k` is to `l`. On success writes a model handle
/// to `out`.
///
/// # Safety
/// All pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn pbdl_train(
    points: *const f64,
    n: usize,
    dim: usize,
    quads: *const usize,
    m: usize,
    margin: f64,
    lambda: f64,
    out: *mut *mut PbdlModel,
) -> PbdlStatus {
    if points.is_null() || (quads.is_null() && m > 0) || out.is_null() {
        return PbdlStatus::PbdlNullPointer;
    }
    if n == 0 || dim == 0 {
        return set_error(&Error::InvalidArgument("need n >= 1 and dim >= 1".into()));
    }
    let flat = slice::from_raw_parts(points, n * dim);
    let rows: Vec<Vec<f64>> = flat.chunks(dim).map(|c| c.to_vec()).collect();
    let quad_rows: Vec<[usize; 4]> = if m == 0 {
        Vec::new()
    } else {
        slice::from_raw_parts(quads, m * 4)
            .chunks(4)
            .map(|c| [c[0], c[1], c[2], c[3]])
            .collect()
    };
    let set = match QuadrupletSet::new(quad_rows, margin) {
        Ok(s) => s,
        Err(e) => return set_error(&e),
    };
    let config = TrainConfig { lambda, ..TrainConfig::default() };
    match train_pbdl(&rows, &set, &config) {
        Ok(outcome) => {
            *out = Box::into_raw(Box::new(PbdlModel { inner: outcome.model }));
            PbdlStatus::PbdlOk
        }
        Err(e) => set_error(&e),
    }
}

/// Release a model handle. Null is allowed.
///
/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pbdl_model_free(model: *mut PbdlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Release a string returned by this library. Null is allowed.
///
/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pbdl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
