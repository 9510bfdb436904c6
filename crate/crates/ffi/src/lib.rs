//! C interface to `qecsearch`.
//!
//! Codes are opaque `QsCode` handles freed with `qs_code_free`. Every call
//! returns a `QsStatus`; on failure `qs_last_error` gives a message that
//! stays valid until the next failing call on the same thread. Strings
//! returned through out-parameters are freed with `qs_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qecsearch::artifact::CodeArtifact;
use qecsearch::catalog;
use qecsearch::cost::{cost_from_basis, Norm};
use qecsearch::error_model::pauli_below_weight;
use qecsearch::optimize::{varqec_search, SearchStatus};
use qecsearch::verify::{code_distance, concat_bound, stabilizer_basis, weight_enumerators, CodeCandidate};
use qecsearch::Error;

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Invariant = 4,
    Guard = 5,
    Io = 6,
    Parse = 7,
    /// A search ran its whole budget without reaching the tolerance.
    Exhausted = 8,
    Panic = 9,
}

/// Opaque code handle.
pub struct QsCode {
    inner: CodeCandidate,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> QsStatus {
    match e {
        Error::DimensionMismatch(_) | Error::OutOfRange(_) | Error::Invalid(_) => QsStatus::InvalidArgument,
        Error::Parse(_) | Error::Json(_) => QsStatus::Parse,
        Error::Config(_) => QsStatus::Config,
        Error::Invariant(_) => QsStatus::Invariant,
        Error::Guard(_) => QsStatus::Guard,
        Error::Io(_) => QsStatus::Io,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guarded<F: FnOnce() -> Result<QsStatus, (QsStatus, String)>>(f: F) -> QsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside qecsearch".into());
            QsStatus::Panic
        }
    }
}

fn lib<T>(r: qecsearch::Result<T>) -> Result<T, (QsStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (QsStatus, String) {
    (QsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (QsStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (QsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn code_ref<'a>(p: *const QsCode) -> Result<&'a CodeCandidate, (QsStatus, String)> {
    p.as_ref().map(|c| &c.inner).ok_or_else(|| null("code"))
}

unsafe fn emit(out: *mut *mut QsCode, code: CodeCandidate) {
    *out = Box::into_raw(Box::new(QsCode { inner: code }));
}

/// Message for the last failure on this thread, or NULL.
#[no_mangle]
pub extern "C" fn qs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn qs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Looks up a built-in code ("5-2-3", "steane", "8-8-3", ...).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qs_code_builtin(name: *const c_char, out: *mut *mut QsCode) -> QsStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let name = c_str(name, "name")?;
        emit(out, lib(qecsearch::cli::builtin(name))?);
        Ok(QsStatus::Ok)
    })
}

/// Builds the stabilizer code of `count` generator strings.
///
/// # Safety
/// `gens` must point to `count` NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qs_code_from_stabilizers(
    gens: *const *const c_char,
    count: usize,
    out: *mut *mut QsCode,
) -> QsStatus {
    guarded(|| {
        if out.is_null() || gens.is_null() {
            return Err(null("argument"));
        }
        let rows: Vec<&str> =
            (0..count).map(|i| c_str(*gens.add(i), "generator")).collect::<Result<_, _>>()?;
        let g = lib(catalog::generators(&rows))?;
        emit(out, lib(stabilizer_basis(&g))?);
        Ok(QsStatus::Ok)
    })
}

/// Parses and checks a code artifact.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qs_code_from_artifact(json: *const c_char, out: *mut *mut QsCode) -> QsStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = c_str(json, "json")?;
        let art = lib(CodeArtifact::from_json(text))?;
        emit(out, lib(art.code())?);
        Ok(QsStatus::Ok)
    })
}

/// Serializes the code as an artifact; free the string with `qs_string_free`.
///
/// # Safety
/// `code` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qs_code_to_artifact(code: *const QsCode, seed: u64, out: *mut *mut c_char) -> QsStatus {
    guarded(|| {
        let c = code_ref(code)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let json = lib(CodeArtifact::from_code(c, seed).to_json())?;
        *out = CString::new(json).map_err(|e| (QsStatus::Parse, e.to_string()))?.into_raw();
        Ok(QsStatus::Ok)
    })
}

/// Runs a named search preset with the given seed. On `Ok` a code handle is
/// written to `out`; on `Exhausted` `out` is left NULL. `cost_l1` receives
/// the best C^ℓ1 in both cases.
///
/// # Safety
/// `name` must be NUL-terminated; `out` and `cost_l1` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qs_search_preset(
    name: *const c_char,
    seed: u64,
    out: *mut *mut QsCode,
    cost_l1: *mut f64,
) -> QsStatus {
    guarded(|| {
        if out.is_null() || cost_l1.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let mut cfg = lib(qecsearch::presets::preset(c_str(name, "name")?))?;
        cfg.seed = seed;
        let r = lib(varqec_search(&cfg))?;
        *cost_l1 = r.cost_l1;
        if r.status == SearchStatus::Exhausted {
            set_error(format!("search exhausted with C_l1 = {:e}", r.cost_l1));
            return Ok(QsStatus::Exhausted);
        }
        emit(out, r.code);
        Ok(QsStatus::Ok)
    })
}

/// # Safety
/// `code` must be a live handle; `n` and `k` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qs_code_shape(code: *const QsCode, n: *mut usize, k: *mut usize) -> QsStatus {
    guarded(|| {
        let c = code_ref(code)?;
        if n.is_null() || k.is_null() {
            return Err(null("out"));
        }
        *n = c.n;
        *k = c.k;
        Ok(QsStatus::Ok)
    })
}

/// # Safety
/// `code` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qs_code_distance(code: *const QsCode, out: *mut usize) -> QsStatus {
    guarded(|| {
        let c = code_ref(code)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if c.n > qecsearch::verify::SWEEP_GUARD {
            return Err((QsStatus::Guard, format!("{}-qubit distance sweep", c.n)));
        }
        *out = code_distance(c);
        Ok(QsStatus::Ok)
    })
}

/// Writes A_0..A_n and B_0..B_n; `len` must be n + 1.
///
/// # Safety
/// `code` must be a live handle; `a` and `b` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qs_code_enumerators(code: *const QsCode, a: *mut f64, b: *mut f64, len: usize) -> QsStatus {
    guarded(|| {
        let c = code_ref(code)?;
        if a.is_null() || b.is_null() {
            return Err(null("output buffer"));
        }
        if len != c.n + 1 {
            return Err((QsStatus::InvalidArgument, format!("buffers of {len} for n = {}", c.n)));
        }
        let (ea, eb) = lib(weight_enumerators(c, false))?;
        ptr::copy_nonoverlapping(ea.as_ptr(), a, len);
        ptr::copy_nonoverlapping(eb.as_ptr(), b, len);
        Ok(QsStatus::Ok)
    })
}

/// C^ℓ1 of the code against all Pauli errors of weight < `d`.
///
/// # Safety
/// `code` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qs_code_cost_l1(code: *const QsCode, d: usize, out: *mut f64) -> QsStatus {
    guarded(|| {
        let c = code_ref(code)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let e = lib(pauli_below_weight(c.n, d))?;
        *out = lib(cost_from_basis(&c.basis, &e, Norm::L1))?.total;
        Ok(QsStatus::Ok)
    })
}

/// Effective-distance bound of a concatenated code.
///
/// # Safety
/// `deltas` must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qs_concat_bound(deltas: *const f64, len: usize, c_z: f64, out: *mut f64) -> QsStatus {
    guarded(|| {
        if deltas.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let d = std::slice::from_raw_parts(deltas, len);
        *out = lib(concat_bound(d, c_z))?;
        Ok(QsStatus::Ok)
    })
}

/// # Safety
/// `code` must come from this library and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn qs_code_free(code: *mut QsCode) {
    if !code.is_null() {
        drop(Box::from_raw(code));
    }
}

/// # Safety
/// `s` must come from this library and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn qs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
