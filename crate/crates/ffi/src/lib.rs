//! C interface over `degrelax`: opaque handles, status codes and a per-thread
//! last-error message.
//!
//! Every entry point returns a [`DwStatus`]; results come back through out
//! pointers. Handles are released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use degrelax::degeneracy::{detect_intervals, DegeneracyDecomposition, DEFAULT_MAX_INTERVALS};
use degrelax::function::{FunctionSpec, Interval, PiecewiseFunction, QuadratureConfig, Weight};
use degrelax::hat::{build_hat, HatWeight};
use degrelax::muckenhoupt::{a1_constant, BallFamily};
use degrelax::pairing::pairing_total_variation;
use degrelax::poincare::poincare_gap;
use degrelax::relaxation::relaxed_functional;
use degrelax::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    OutOfDomain = 4,
    NotInDomain = 5,
    HypothesisViolated = 6,
    NumericalFailure = 7,
    Panic = 8,
}

/// Weight function.
pub struct DwWeight(Weight);

/// Candidate function.
pub struct DwFunction(PiecewiseFunction);

/// Weight with its nondegenerate intervals and auxiliary weight.
pub struct DwAnalysis {
    weight: Weight,
    dec: DegeneracyDecomposition,
    hat: HatWeight,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DwStatus {
    match e {
        Error::Parse(_) | Error::Io(_) => DwStatus::Parse,
        Error::OutOfDomain { .. } => DwStatus::OutOfDomain,
        Error::NotInDomain => DwStatus::NotInDomain,
        Error::HypothesisViolated(_) | Error::MissingDerivative | Error::NotPositive | Error::EmptyDecomposition => DwStatus::HypothesisViolated,
        Error::BadParameters(_) | Error::InvalidInterval { .. } | Error::InvalidFunction(_) | Error::NegativeWeight { .. } => DwStatus::InvalidArgument,
        _ => DwStatus::NumericalFailure,
    }
}

/// Runs `f`, recording errors and containing panics.
fn guard<F: FnOnce() -> Result<(), DwStatus>>(f: F) -> DwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            DwStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            DwStatus::Panic
        }
    }
}

fn fail(e: Error) -> DwStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> DwStatus {
    set_error(format!("null pointer: {what}"));
    DwStatus::NullPointer
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, DwStatus> {
    if p.is_null() {
        return Err(null("json"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(Error::Parse("document is not UTF-8".into())))
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, DwStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), DwStatus> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn dw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a weight document.
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dw_weight_from_json(json: *const c_char, out: *mut *mut DwWeight) -> DwStatus {
    guard(|| {
        let w = FunctionSpec::from_json(text(json)?).and_then(|s| s.to_weight()).map_err(fail)?;
        put(out, Box::into_raw(Box::new(DwWeight(w))), "out")
    })
}

/// # Safety
/// `w` must come from [`dw_weight_from_json`] or be null.
#[no_mangle]
pub unsafe extern "C" fn dw_weight_free(w: *mut DwWeight) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// Parses a function document.
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dw_function_from_json(json: *const c_char, out: *mut *mut DwFunction) -> DwStatus {
    guard(|| {
        let f = FunctionSpec::from_json(text(json)?).and_then(|s| s.to_function()).map_err(fail)?;
        put(out, Box::into_raw(Box::new(DwFunction(f))), "out")
    })
}

/// # Safety
/// `f` must come from [`dw_function_from_json`] or be null.
#[no_mangle]
pub unsafe extern "C" fn dw_function_free(f: *mut DwFunction) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Detects the nondegenerate intervals and builds the auxiliary weight.
///
/// # Safety
/// `w` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dw_analysis_new(w: *const DwWeight, resolution: f64, out: *mut *mut DwAnalysis) -> DwStatus {
    guard(|| {
        let weight = get(w, "weight")?.0.clone();
        let dec = detect_intervals(&weight, weight.domain(), resolution, DEFAULT_MAX_INTERVALS).map_err(fail)?;
        let hat = build_hat(&weight, &dec).map_err(fail)?;
        put(out, Box::into_raw(Box::new(DwAnalysis { weight, dec, hat })), "out")
    })
}

/// # Safety
/// `a` must come from [`dw_analysis_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn dw_analysis_free(a: *mut DwAnalysis) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// Number of intervals and whether the list was truncated.
///
/// # Safety
/// `a` must be a live handle; out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn dw_analysis_interval_count(a: *const DwAnalysis, count: *mut usize, truncated: *mut bool) -> DwStatus {
    guard(|| {
        let a = get(a, "analysis")?;
        put(count, a.dec.len(), "count")?;
        put(truncated, a.dec.truncated, "truncated")
    })
}

/// Endpoints of interval `index`.
///
/// # Safety
/// `a` must be a live handle; out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn dw_analysis_interval(a: *const DwAnalysis, index: usize, lo: *mut f64, hi: *mut f64) -> DwStatus {
    guard(|| {
        let a = get(a, "analysis")?;
        let i = a.dec.intervals.get(index).ok_or_else(|| fail(Error::BadParameters(format!("no interval {index}"))))?;
        put(lo, i.lo(), "lo")?;
        put(hi, i.hi(), "hi")
    })
}

/// Auxiliary weight at `x`.
///
/// # Safety
/// `a` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dw_analysis_hat_value(a: *const DwAnalysis, x: f64, out: *mut f64) -> DwStatus {
    guard(|| {
        let a = get(a, "analysis")?;
        if !a.weight.domain().contains_closed(x) {
            return Err(fail(Error::OutOfDomain { x }));
        }
        put(out, a.hat.value(x), "out")
    })
}

/// Relaxed energy of `u`; `finite` is false when `u` lies outside the
/// finiteness domain, in which case `value` is left untouched.
///
/// # Safety
/// Handles must be live; out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn dw_relaxed_functional(a: *const DwAnalysis, u: *const DwFunction, panels: usize, finite: *mut bool, value: *mut f64) -> DwStatus {
    guard(|| {
        let (a, u) = (get(a, "analysis")?, get(u, "function")?);
        let q = QuadratureConfig::default().with_panels(panels);
        let r = relaxed_functional(&a.weight, &u.0, &a.dec, &a.hat, &q).map_err(fail)?;
        put(finite, r.finite, "finite")?;
        match r.value {
            Some(v) => put(value, v, "value"),
            None => Ok(()),
        }
    })
}

/// Poincaré margin `Σ TV − Σ ⨍|u − u(mid)| ŵ` of `u`.
///
/// # Safety
/// Handles must be live; `margin` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dw_poincare_margin(a: *const DwAnalysis, u: *const DwFunction, panels: usize, margin: *mut f64) -> DwStatus {
    guard(|| {
        let (a, u) = (get(a, "analysis")?, get(u, "function")?);
        let q = QuadratureConfig::default().with_panels(panels);
        let r = poincare_gap(&a.weight, &a.hat, &a.dec, &u.0, &q).map_err(fail)?;
        put(margin, r.margin, "margin")
    })
}

/// Total variation of the pairing measure on `(lo, hi)`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dw_pairing_total_variation(w: *const DwWeight, u: *const DwFunction, lo: f64, hi: f64, panels: usize, out: *mut f64) -> DwStatus {
    guard(|| {
        let (w, u) = (get(w, "weight")?, get(u, "function")?);
        let i = Interval::new(lo, hi).map_err(fail)?;
        let q = QuadratureConfig::default().with_panels(panels);
        let e = pairing_total_variation(&w.0, &u.0, i, &q).map_err(fail)?;
        put(out, e.value, "out")
    })
}

/// Empirical A₁ constant over the default ball family on the weight's domain.
///
/// # Safety
/// `w` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dw_a1_constant(w: *const DwWeight, out: *mut f64) -> DwStatus {
    guard(|| {
        let w = get(w, "weight")?;
        let r = a1_constant(&w.0, w.0.domain(), &BallFamily::default(), &QuadratureConfig::default()).map_err(fail)?;
        put(out, r.best_c, "out")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&Error::Parse("x".into())), DwStatus::Parse);
        assert_eq!(status_of(&Error::NotInDomain), DwStatus::NotInDomain);
        assert_eq!(status_of(&Error::NotPositive), DwStatus::HypothesisViolated);
        assert_eq!(status_of(&Error::ConvergenceNotEstablished("x".into())), DwStatus::NumericalFailure);
    }

    #[test]
    fn panics_are_contained() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, DwStatus::Panic);
        let msg = unsafe { CStr::from_ptr(dw_last_error_message()) };
        assert_eq!(msg.to_str().unwrap(), "internal panic");
        assert_eq!(guard(|| Ok(())), DwStatus::Ok);
        assert!(dw_last_error_message().is_null());
    }
}
