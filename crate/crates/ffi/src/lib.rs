//! C ABI over a trained sentencelens model.
//!
//! A model is loaded once into an opaque [`SlModel`] handle and is read-only
//! afterwards, so one handle may be shared between threads. Every fallible
//! call returns an [`SlStatus`]; on failure a description is available from
//! [`sl_last_error_message`] on the same thread. Strings returned through
//! `char **` out-parameters are owned by the caller and must be released with
//! [`sl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use sentencelens::explain::DEFAULT_TOP_K;
use sentencelens::model_file::{LoadedModel, ModelArtifact};
use sentencelens::service::{GlobalResponse, PredictError, PredictResponse, DISCLAIMER};
use sentencelens::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    MalformedModel = 4,
    EmptyText = 5,
    InvalidArgument = 6,
    Internal = 7,
}

/// Opaque handle to a loaded model.
pub struct SlModel {
    inner: LoadedModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let mut bytes = message.into().into_bytes();
    bytes.retain(|&b| b != 0);
    let c = CString::new(bytes).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: SlStatus, message: impl Into<String>) -> SlStatus {
    set_error(message);
    status
}

fn status_of(e: &Error) -> SlStatus {
    match e {
        Error::Io { .. } => SlStatus::Io,
        Error::UnsupportedFormat(_)
        | Error::MalformedModel(_)
        | Error::Parse { .. }
        | Error::Json(_) => SlStatus::MalformedModel,
        _ => SlStatus::Internal,
    }
}

/// Runs `f`, turning a panic into `SlStatus::Internal`.
fn guard(f: impl FnOnce() -> SlStatus) -> SlStatus {
    catch_unwind(AssertUnwindSafe(f))
        .unwrap_or_else(|_| fail(SlStatus::Internal, "panic inside sentencelens"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, SlStatus> {
    if p.is_null() {
        return Err(fail(SlStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SlStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn model_arg<'a>(p: *const SlModel) -> Result<&'a LoadedModel, SlStatus> {
    p.as_ref()
        .map(|m| &m.inner)
        .ok_or_else(|| fail(SlStatus::NullArgument, "model is null"))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> SlStatus {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            SlStatus::Ok
        }
        Err(_) => fail(SlStatus::Internal, "output contained a NUL byte"),
    }
}

unsafe fn store_model(
    out: *mut *mut SlModel,
    result: sentencelens::Result<LoadedModel>,
) -> SlStatus {
    match result {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(SlModel { inner }));
            SlStatus::Ok
        }
        Err(e) => fail(status_of(&e), e.to_string()),
    }
}

/// Loads a model file. On success `*out` receives a handle to free with
/// [`sl_model_free`].
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_model_load(path: *const c_char, out: *mut *mut SlModel) -> SlStatus {
    guard(|| {
        if out.is_null() {
            return fail(SlStatus::NullArgument, "out is null");
        }
        *out = ptr::null_mut();
        let path = match str_arg(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        store_model(out, ModelArtifact::load(Path::new(path)))
    })
}

/// Loads a model from the bytes of a model file.
///
/// # Safety
/// `bytes` must point to `len` readable bytes and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sl_model_from_json(
    bytes: *const u8,
    len: usize,
    out: *mut *mut SlModel,
) -> SlStatus {
    guard(|| {
        if out.is_null() {
            return fail(SlStatus::NullArgument, "out is null");
        }
        *out = ptr::null_mut();
        if bytes.is_null() {
            return fail(SlStatus::NullArgument, "bytes is null");
        }
        let slice = std::slice::from_raw_parts(bytes, len);
        store_model(out, LoadedModel::from_bytes(slice))
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `model` must come from a load function and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sl_model_free(model: *mut SlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Predicted sentence in months for raw decision text.
///
/// # Safety
/// `model` must be a live handle, `text` NUL-terminated, `out_months` valid.
#[no_mangle]
pub unsafe extern "C" fn sl_predict(
    model: *const SlModel,
    text: *const c_char,
    out_months: *mut f64,
) -> SlStatus {
    guard(|| {
        if out_months.is_null() {
            return fail(SlStatus::NullArgument, "out_months is null");
        }
        let (m, text) = match (model_arg(model), str_arg(text, "text")) {
            (Ok(m), Ok(t)) => (m, t),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match PredictResponse::build(m, text, DEFAULT_TOP_K) {
            Ok(r) => {
                *out_months = r.predicted_months;
                SlStatus::Ok
            }
            Err(e) => predict_failure(e),
        }
    })
}

fn predict_failure(e: PredictError) -> SlStatus {
    match e {
        PredictError::EmptyText => fail(SlStatus::EmptyText, "text must be non-empty"),
        other => fail(SlStatus::Internal, other.to_string()),
    }
}

/// Prediction with its top `k` phrase contributions, as the same JSON object
/// the HTTP predict endpoint returns.
///
/// # Safety
/// `model` must be a live handle, `text` NUL-terminated, `out_json` valid.
#[no_mangle]
pub unsafe extern "C" fn sl_explain_json(
    model: *const SlModel,
    text: *const c_char,
    k: usize,
    out_json: *mut *mut c_char,
) -> SlStatus {
    guard(|| {
        if out_json.is_null() {
            return fail(SlStatus::NullArgument, "out_json is null");
        }
        *out_json = ptr::null_mut();
        let (m, text) = match (model_arg(model), str_arg(text, "text")) {
            (Ok(m), Ok(t)) => (m, t),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        if k == 0 {
            return fail(SlStatus::InvalidArgument, "k must be at least 1");
        }
        match PredictResponse::build(m, text, k) {
            Ok(r) => match serde_json::to_string(&r) {
                Ok(s) => write_string(out_json, s),
                Err(e) => fail(SlStatus::Internal, e.to_string()),
            },
            Err(e) => predict_failure(e),
        }
    })
}

/// Top `k` positive and negative phrases by idf-adjusted weight, as JSON.
///
/// # Safety
/// `model` must be a live handle and `out_json` valid.
#[no_mangle]
pub unsafe extern "C" fn sl_global_json(
    model: *const SlModel,
    k: usize,
    out_json: *mut *mut c_char,
) -> SlStatus {
    guard(|| {
        if out_json.is_null() {
            return fail(SlStatus::NullArgument, "out_json is null");
        }
        *out_json = ptr::null_mut();
        let m = match model_arg(model) {
            Ok(m) => m,
            Err(s) => return s,
        };
        if k == 0 {
            return fail(SlStatus::InvalidArgument, "k must be at least 1");
        }
        let r = m.artifact.global_ranking(k);
        let resp = GlobalResponse {
            k,
            top_positive: r.top_positive,
            top_negative: r.top_negative,
            model_hash: m.content_hash.clone(),
            disclaimer: DISCLAIMER.to_string(),
        };
        match serde_json::to_string(&resp) {
            Ok(s) => write_string(out_json, s),
            Err(e) => fail(SlStatus::Internal, e.to_string()),
        }
    })
}

/// Hex SHA-256 of the model file the handle was loaded from.
///
/// # Safety
/// `model` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sl_model_hash(model: *const SlModel, out: *mut *mut c_char) -> SlStatus {
    guard(|| {
        if out.is_null() {
            return fail(SlStatus::NullArgument, "out is null");
        }
        *out = ptr::null_mut();
        match model_arg(model) {
            Ok(m) => write_string(out, m.content_hash.clone()),
            Err(s) => s,
        }
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
