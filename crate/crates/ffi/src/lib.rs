//! C ABI over the purchase-timing solvers.
//!
//! Every fallible function returns a [`PtStatus`] and writes its result
//! through an out-pointer. On failure the message is available from
//! [`pt_last_error`] on the calling thread. Handles are opaque and must be
//! released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use purchase_timing::cli::{self, CliError, RunOptions};
use purchase_timing::defaultable::{closed_form_price, DefaultableModel, IntensitySpec, PayoffSpec, Side};
use purchase_timing::perpetual::{purchase_threshold, timing_value, PerpetualParams, PurchaseThreshold};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    UnknownScenario = 4,
    Solver = 5,
    Io = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PtSide {
    Market = 0,
    Buyer = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PtPayoff {
    Call = 0,
    Put = 1,
    DigitalCall = 2,
}

/// Closed-form perpetual put quantities.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PtPerpetualThresholds {
    /// Market exercise threshold.
    pub b_star: f64,
    /// Buyer exercise threshold.
    pub b_tilde_star: f64,
    /// Purchase threshold.
    pub s_star: f64,
    /// Slope of the timing value below `s_star`.
    pub a: f64,
    /// Timing value as `s -> infinity`.
    pub limit: f64,
}

/// Opaque perpetual put pair with its purchase threshold.
pub struct PtPerpetual {
    threshold: PurchaseThreshold,
}

/// Opaque result of a scenario run.
pub struct PtRun {
    summary: CString,
    out_dir: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: PtStatus, msg: impl Into<String>) -> PtStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> PtStatus) -> PtStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(PtStatus::Panic, "internal panic"),
    }
}

/// Message of the last failure on this thread, or null. Valid until the next
/// call into this library on the same thread.
#[no_mangle]
pub extern "C" fn pt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Build the perpetual put pair for constant intensities
/// `lambda_market < lambda_buyer`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn pt_perpetual_new(
    r: f64,
    sigma: f64,
    strike: f64,
    lambda_market: f64,
    lambda_buyer: f64,
    out: *mut *mut PtPerpetual,
) -> PtStatus {
    guard(|| {
        if out.is_null() {
            return fail(PtStatus::NullPointer, "out is null");
        }
        let params = PerpetualParams {
            r,
            sigma,
            strike,
            lambda_market,
            lambda_buyer,
        };
        match purchase_threshold(&params) {
            Ok(threshold) => {
                *out = Box::into_raw(Box::new(PtPerpetual { threshold }));
                PtStatus::Ok
            }
            Err(e) => fail(PtStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// # Safety
/// `handle` must come from [`pt_perpetual_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pt_perpetual_free(handle: *mut PtPerpetual) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `handle` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pt_perpetual_thresholds(
    handle: *const PtPerpetual,
    out: *mut PtPerpetualThresholds,
) -> PtStatus {
    guard(|| {
        let (Some(h), false) = (handle.as_ref(), out.is_null()) else {
            return fail(PtStatus::NullPointer, "null handle or out");
        };
        let th = &h.threshold;
        *out = PtPerpetualThresholds {
            b_star: th.market.threshold,
            b_tilde_star: th.buyer.threshold,
            s_star: th.s_star,
            a: th.slope,
            limit: th.limit(),
        };
        PtStatus::Ok
    })
}

/// Perpetual put price of one side at spot `s`.
///
/// # Safety
/// `handle` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pt_perpetual_price(
    handle: *const PtPerpetual,
    which: PtSide,
    s: f64,
    out: *mut f64,
) -> PtStatus {
    guard(|| {
        let (Some(h), false) = (handle.as_ref(), out.is_null()) else {
            return fail(PtStatus::NullPointer, "null handle or out");
        };
        if !(s.is_finite() && s >= 0.0) {
            return fail(PtStatus::InvalidArgument, format!("spot must be >= 0, got {s}"));
        }
        let put = match which {
            PtSide::Market => &h.threshold.market,
            PtSide::Buyer => &h.threshold.buyer,
        };
        *out = put.value(s);
        PtStatus::Ok
    })
}

/// Value of optimally timing the purchase at spot `s`.
///
/// # Safety
/// `handle` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pt_perpetual_timing_value(handle: *const PtPerpetual, s: f64, out: *mut f64) -> PtStatus {
    guard(|| {
        let (Some(h), false) = (handle.as_ref(), out.is_null()) else {
            return fail(PtStatus::NullPointer, "null handle or out");
        };
        if !(s.is_finite() && s >= 0.0) {
            return fail(PtStatus::InvalidArgument, format!("spot must be >= 0, got {s}"));
        }
        *out = timing_value(&h.threshold, s);
        PtStatus::Ok
    })
}

/// Closed-form European price at `(t, s)` under a constant default
/// intensity `lambda`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn pt_closed_form_price(
    r: f64,
    sigma: f64,
    lambda: f64,
    maturity: f64,
    payoff: PtPayoff,
    strike: f64,
    t: f64,
    s: f64,
    out: *mut f64,
) -> PtStatus {
    guard(|| {
        if out.is_null() {
            return fail(PtStatus::NullPointer, "out is null");
        }
        let intensity = IntensitySpec::constant(lambda);
        let model = DefaultableModel {
            r,
            sigma,
            maturity,
            market: intensity.clone(),
            buyer: intensity,
        };
        let payoff = match payoff {
            PtPayoff::Call => PayoffSpec::Call { strike },
            PtPayoff::Put => PayoffSpec::Put { strike },
            PtPayoff::DigitalCall => PayoffSpec::DigitalCall { strike },
        };
        let checked = model.validate().and_then(|_| payoff.validate());
        match checked.and_then(|_| closed_form_price(&model, &payoff, Side::Market, t, s)) {
            Ok(v) => {
                *out = v;
                PtStatus::Ok
            }
            Err(e) => fail(PtStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Run a JSON scenario document and write its outputs. `out_dir` may be
/// null to use the environment or the document's directory.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out_dir` null or
/// NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pt_run_config(
    config_json: *const c_char,
    out_dir: *const c_char,
    out: *mut *mut PtRun,
) -> PtStatus {
    guard(|| {
        if config_json.is_null() || out.is_null() {
            return fail(PtStatus::NullPointer, "null config or out");
        }
        let Ok(text) = CStr::from_ptr(config_json).to_str() else {
            return fail(PtStatus::InvalidArgument, "config is not UTF-8");
        };
        let dir = if out_dir.is_null() {
            None
        } else {
            match CStr::from_ptr(out_dir).to_str() {
                Ok(d) => Some(PathBuf::from(d)),
                Err(_) => return fail(PtStatus::InvalidArgument, "out_dir is not UTF-8"),
            }
        };
        match cli::run_text(text, &RunOptions { out: dir }) {
            Ok(report) => {
                let summary = serde_json::to_string_pretty(&report.summary).unwrap_or_default();
                let run = PtRun {
                    summary: CString::new(summary).unwrap_or_default(),
                    out_dir: CString::new(report.out_dir.to_string_lossy().into_owned()).unwrap_or_default(),
                };
                *out = Box::into_raw(Box::new(run));
                PtStatus::Ok
            }
            Err(e) => {
                let status = match &e {
                    CliError::Config(_) => PtStatus::Config,
                    CliError::UnknownScenario(_) | CliError::UnknownPreset(_) => PtStatus::UnknownScenario,
                    CliError::Solver(_) => PtStatus::Solver,
                    CliError::Io(_) => PtStatus::Io,
                };
                fail(status, e.to_string())
            }
        }
    })
}

/// Summary document of a run, owned by the handle.
///
/// # Safety
/// `handle` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn pt_run_summary(handle: *const PtRun) -> *const c_char {
    handle.as_ref().map_or(std::ptr::null(), |h| h.summary.as_ptr())
}

/// Directory the run wrote into, owned by the handle.
///
/// # Safety
/// `handle` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn pt_run_output_dir(handle: *const PtRun) -> *const c_char {
    handle.as_ref().map_or(std::ptr::null(), |h| h.out_dir.as_ptr())
}

/// # Safety
/// `handle` must come from [`pt_run_config`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pt_run_free(handle: *mut PtRun) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_out_pointer_is_reported() {
        let status = unsafe { pt_perpetual_new(0.05, 0.2, 5.0, 0.025, 0.05, std::ptr::null_mut()) };
        assert_eq!(status, PtStatus::NullPointer);
        assert!(!pt_last_error().is_null());
    }

    #[test]
    fn success_clears_the_last_error() {
        let mut h = std::ptr::null_mut();
        unsafe {
            pt_perpetual_new(0.05, 0.2, 5.0, 0.05, 0.025, &mut h);
            assert!(!pt_last_error().is_null());
            assert_eq!(pt_perpetual_new(0.05, 0.2, 5.0, 0.025, 0.05, &mut h), PtStatus::Ok);
            assert!(pt_last_error().is_null());
            pt_perpetual_free(h);
        }
    }
}
