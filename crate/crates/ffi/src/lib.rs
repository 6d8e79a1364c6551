//! C ABI over `hazardlab`.
//!
//! Every function returns an [`HlStatus`]; results go through out-pointers.
//! On failure the message is kept per thread and read with
//! [`hl_last_error`]. Strings returned by the library are released with
//! [`hl_string_free`], models with [`hl_model_free`].
//!
//! # Safety
//!
//! Pointer arguments must be null or valid for the access the function
//! documents: out-pointers writable, strings NUL-terminated, buffers at
//! least `capacity` elements long, handles and strings as returned by this
//! library and not yet freed.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hazardlab::cli::{intensity_curve, verify_outcome};
use hazardlab::config::RunConfig;
use hazardlab::gaussian;
use hazardlab::HazardError;

/// Status codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HlStatus {
    Ok = 0,
    /// Null pointer or invalid UTF-8.
    InvalidArgument = 1,
    /// Argument outside the function's domain.
    Domain = 2,
    /// Malformed configuration or failed model validation.
    Config = 3,
    /// Quadrature failure, singular kernel or broken internal contract.
    Numerical = 4,
    /// Output buffer too small; the required length was written.
    BufferTooSmall = 5,
    /// Unexpected panic inside the library.
    Internal = 6,
}

/// A parsed run configuration: model, schedule and optional intensity and
/// verification sections.
pub struct HlModel {
    cfg: RunConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &HazardError) -> HlStatus {
    match e {
        HazardError::Domain(_) => HlStatus::Domain,
        HazardError::Config(_) | HazardError::Validation(_) | HazardError::Io(_) => HlStatus::Config,
        HazardError::Contract(_) | HazardError::Quadrature { .. } | HazardError::SingularKernel { .. } => {
            HlStatus::Numerical
        }
    }
}

struct Fail(HlStatus, String);

impl From<HazardError> for Fail {
    fn from(e: HazardError) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn invalid(msg: &str) -> Fail {
    Fail(HlStatus::InvalidArgument, msg.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> HlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            clear_error();
            HlStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            HlStatus::Internal
        }
    }
}

fn write_out<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(invalid("null output pointer"));
    }
    // SAFETY: non-null, and the caller promises it points to writable T.
    unsafe { out.write(v) };
    Ok(())
}

fn scalar(out: *mut f64, f: impl FnOnce() -> hazardlab::Result<f64>) -> HlStatus {
    guard(|| write_out(out, f()?))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next library call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn hl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Standard normal CDF.
///
/// # Safety
///
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn hl_norm_cdf(x: f64, out: *mut f64) -> HlStatus {
    scalar(out, || gaussian::norm_cdf(x))
}

/// `ψ(η, t, y)`: probability that drifted Brownian motion stays above `y < 0` up to `t`.
///
/// # Safety
///
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn hl_psi(eta: f64, t: f64, y: f64, out: *mut f64) -> HlStatus {
    scalar(out, || gaussian::psi_closed(eta, t, y))
}

/// `ψ` by quadrature of the killed density.
///
/// # Safety
///
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn hl_psi_quadrature(eta: f64, t: f64, y: f64, out: *mut f64) -> HlStatus {
    scalar(out, || gaussian::psi_quadrature(eta, t, y))
}

/// `∂ψ/∂t`.
///
/// # Safety
///
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn hl_psi_t(eta: f64, t: f64, y: f64, out: *mut f64) -> HlStatus {
    scalar(out, || gaussian::psi_t(eta, t, y))
}

/// Joint law `φ(η, t, y1, y2)` of staying above `y1` and ending at or below `y2`.
///
/// # Safety
///
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn hl_phi_joint(eta: f64, t: f64, y1: f64, y2: f64, out: *mut f64) -> HlStatus {
    scalar(out, || gaussian::phi_joint(eta, t, y1, y2))
}

/// Survival of a GBM started at `state` above `barrier` over `t`.
///
/// # Safety
///
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn hl_gbm_survival(
    state: f64,
    barrier: f64,
    mu: f64,
    sigma: f64,
    t: f64,
    out: *mut f64,
) -> HlStatus {
    scalar(out, || gaussian::gbm_survival(state, barrier, mu, sigma, t))
}

fn str_arg<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(invalid("null string"));
    }
    // SAFETY: non-null and NUL-terminated by the caller's contract.
    unsafe { CStr::from_ptr(p) }.to_str().map_err(|_| invalid("string is not UTF-8"))
}

fn model_ref<'a>(m: *const HlModel) -> Result<&'a HlModel, Fail> {
    if m.is_null() {
        return Err(invalid("null model"));
    }
    // SAFETY: non-null handles come from hl_model_from_json.
    Ok(unsafe { &*m })
}

/// Parses and validates a JSON run configuration. On success `*out` owns a
/// new model; release it with `hl_model_free`.
///
/// # Safety
///
/// `json` must be null or NUL-terminated; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn hl_model_from_json(json: *const c_char, out: *mut *mut HlModel) -> HlStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("null output pointer"));
        }
        let cfg = RunConfig::parse(str_arg(json)?)?;
        write_out(out, Box::into_raw(Box::new(HlModel { cfg })))
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
///
/// `model` must be null or an unfreed handle from `hl_model_from_json`.
#[no_mangle]
pub unsafe extern "C" fn hl_model_free(model: *mut HlModel) {
    if !model.is_null() {
        // SAFETY: created by Box::into_raw in hl_model_from_json.
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Intensity over the configured window. Writes up to `capacity` knots to
/// `times` and `values` and the knot count to `*len`; if `capacity` is too
/// small nothing else is written and `HL_STATUS_BUFFER_TOO_SMALL` returned.
/// Pass `capacity = 0` with null buffers to query the length.
///
/// # Safety
///
/// `model` must be null or a live handle; `len` null or writable; `times` and
/// `values` null or writable for `capacity` elements.
#[no_mangle]
pub unsafe extern "C" fn hl_model_intensity(
    model: *const HlModel,
    times: *mut f64,
    values: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> HlStatus {
    guard(|| {
        let m = model_ref(model)?;
        let curve = intensity_curve(&m.cfg)?;
        let n = curve.points.len();
        write_out(len, n)?;
        if capacity < n {
            return Err(Fail(HlStatus::BufferTooSmall, format!("need room for {n} knots, got {capacity}")));
        }
        if times.is_null() || values.is_null() {
            return Err(invalid("null output buffer"));
        }
        for (i, &(t, l)) in curve.points.iter().enumerate() {
            // SAFETY: i < n <= capacity elements per the caller's contract.
            unsafe {
                times.add(i).write(t);
                values.add(i).write(l);
            }
        }
        Ok(())
    })
}

/// Runs the configured verification. `seed < 0` uses `verify.seed`.
/// `*report` receives the JSON report (free with `hl_string_free`) and
/// `*passed` whether every test passed.
///
/// # Safety
///
/// `model` must be null or a live handle; `report` and `passed` null or writable.
#[no_mangle]
pub unsafe extern "C" fn hl_model_verify_json(
    model: *const HlModel,
    seed: i64,
    report: *mut *mut c_char,
    passed: *mut bool,
) -> HlStatus {
    guard(|| {
        let m = model_ref(model)?;
        if report.is_null() || passed.is_null() {
            return Err(invalid("null output pointer"));
        }
        let seed = u64::try_from(seed).ok();
        let outcome = verify_outcome(&m.cfg, seed, None)?;
        let json = serde_json::to_string(&outcome).map_err(|e| Fail(HlStatus::Internal, e.to_string()))?;
        let s = CString::new(json).map_err(|e| Fail(HlStatus::Internal, e.to_string()))?;
        write_out(passed, outcome.pass())?;
        write_out(report, s.into_raw())
    })
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
///
/// `s` must be null or an unfreed string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn hl_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: created by CString::into_raw in this library.
        drop(unsafe { CString::from_raw(s) });
    }
}
