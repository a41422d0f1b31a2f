//! C ABI over `ppsq-core`.
//!
//! Scenarios are passed around as opaque [`PpsqScenario`] handles. Every
//! fallible function returns a [`PpsqStatus`] and writes results through
//! out-pointers; on failure `ppsq_last_error_message` describes the error
//! for the calling thread. Strings returned by the library must be released
//! with `ppsq_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ppsq::abl::{abl_probability, contextual_abl, Usage};
use ppsq::cli::simulate_document;
use ppsq::histories::{consistency_check, merge_families, HistoryFamily};
use ppsq::scenario::{builtin, from_json_str, Scenario};
use ppsq::Error;

/// Opaque scenario handle.
pub struct PpsqScenario {
    inner: Scenario,
}

/// Result codes shared by every function in this API.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PpsqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Parse = 4,
    Io = 5,
    UnknownName = 6,
    PostSelectionImpossible = 7,
    CounterfactualInvalid = 8,
    InconsistentFamily = 9,
    ConditioningOnNull = 10,
    Internal = 11,
}

impl From<&Error> for PpsqStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::PostSelectionImpossible { .. } => PpsqStatus::PostSelectionImpossible,
            Error::CounterfactualInvalid { .. } => PpsqStatus::CounterfactualInvalid,
            Error::InconsistentFamily { .. } => PpsqStatus::InconsistentFamily,
            Error::ConditioningOnNull { .. } => PpsqStatus::ConditioningOnNull,
            Error::UnknownObservable(_) | Error::UnknownOutcome { .. } => PpsqStatus::UnknownName,
            Error::Parse(_) => PpsqStatus::Parse,
            Error::Io(_) => PpsqStatus::Io,
            _ => PpsqStatus::InvalidArgument,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn fail(status: PpsqStatus, message: impl Into<String>) -> PpsqStatus {
    set_error(message.into());
    status
}

fn fail_with(e: &Error) -> PpsqStatus {
    fail(PpsqStatus::from(e), format!("{}: {e}", e.code()))
}

/// Runs `f`, clearing the thread's error first and converting panics.
fn guarded(f: impl FnOnce() -> Result<(), PpsqStatus>) -> PpsqStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PpsqStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(PpsqStatus::Internal, "internal panic"),
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, PpsqStatus> {
    if p.is_null() {
        return Err(fail(PpsqStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        fail(
            PpsqStatus::InvalidUtf8,
            format!("{what} is not valid UTF-8"),
        )
    })
}

unsafe fn scenario<'a>(s: *const PpsqScenario) -> Result<&'a Scenario, PpsqStatus> {
    s.as_ref()
        .map(|h| &h.inner)
        .ok_or_else(|| fail(PpsqStatus::NullPointer, "scenario handle is null"))
}

fn out_ptr<T>(p: *mut T, what: &str) -> Result<(), PpsqStatus> {
    if p.is_null() {
        Err(fail(PpsqStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn core<T>(r: ppsq::Result<T>) -> Result<T, PpsqStatus> {
    r.map_err(|e| fail_with(&e))
}

fn emit_handle(s: Scenario, out: *mut *mut PpsqScenario) {
    let h = Box::into_raw(Box::new(PpsqScenario { inner: s }));
    unsafe { *out = h };
}

/// Creates a built-in scenario (`"three-box"` or `"n-box:<n>"`).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppsq_scenario_builtin(
    name: *const c_char,
    out: *mut *mut PpsqScenario,
) -> PpsqStatus {
    guarded(|| {
        out_ptr(out, "out")?;
        let name = text(name, "name")?;
        emit_handle(core(builtin(name))?, out);
        Ok(())
    })
}

/// Parses a scenario from its JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppsq_scenario_from_json(
    json: *const c_char,
    out: *mut *mut PpsqScenario,
) -> PpsqStatus {
    guarded(|| {
        out_ptr(out, "out")?;
        let json = text(json, "json")?;
        emit_handle(core(from_json_str(json))?, out);
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ppsq_scenario_free(s: *mut PpsqScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppsq_scenario_dim(s: *const PpsqScenario, out: *mut usize) -> PpsqStatus {
    guarded(|| {
        out_ptr(out, "out")?;
        *out = scenario(s)?.dim();
        Ok(())
    })
}

/// ABL probability of `outcome` for the measured observable `observable`.
///
/// # Safety
/// `s` must be a live handle, strings NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ppsq_abl_probability(
    s: *const PpsqScenario,
    observable: *const c_char,
    outcome: *const c_char,
    out: *mut f64,
) -> PpsqStatus {
    guarded(|| {
        out_ptr(out, "out")?;
        let s = scenario(s)?;
        let obs = core(s.observable(text(observable, "observable")?))?;
        let k = core(obs.outcome_index(text(outcome, "outcome")?))?;
        let tsv = core(s.two_state_vector())?;
        *out = core(abl_probability(&tsv, obs, k))?.probability;
        Ok(())
    })
}

/// ABL query that records which observable was measured. On success
/// `counterfactual` is 1 for a certified counterfactual answer and 0 when the
/// queried outcome was actually measured.
///
/// # Safety
/// `s` must be a live handle, strings NUL-terminated, out-pointers writable.
#[no_mangle]
pub unsafe extern "C" fn ppsq_contextual_abl(
    s: *const PpsqScenario,
    measured: *const c_char,
    queried: *const c_char,
    outcome: *const c_char,
    probability: *mut f64,
    counterfactual: *mut i32,
) -> PpsqStatus {
    guarded(|| {
        out_ptr(probability, "probability")?;
        out_ptr(counterfactual, "counterfactual")?;
        let s = scenario(s)?;
        let m = core(s.observable(text(measured, "measured")?))?;
        let q = core(s.observable(text(queried, "queried")?))?;
        let k = core(q.outcome_index(text(outcome, "outcome")?))?;
        let tsv = core(s.two_state_vector())?;
        let r = core(contextual_abl(&tsv, m, q, k))?;
        *probability = r.probability;
        *counterfactual = i32::from(r.usage == Usage::Counterfactual);
        Ok(())
    })
}

/// Consistency check of the family built from one or more observables
/// (merged when `count > 1`).
///
/// # Safety
/// `names` must point to `count` NUL-terminated strings; out-pointers writable.
#[no_mangle]
pub unsafe extern "C" fn ppsq_consistency(
    s: *const PpsqScenario,
    names: *const *const c_char,
    count: usize,
    consistent: *mut i32,
    max_violation: *mut f64,
) -> PpsqStatus {
    guarded(|| {
        out_ptr(consistent, "consistent")?;
        out_ptr(max_violation, "max_violation")?;
        if count == 0 {
            return Err(fail(
                PpsqStatus::InvalidArgument,
                "at least one observable is required",
            ));
        }
        out_ptr(names as *mut *const c_char, "names")?;
        let s = scenario(s)?;
        let tsv = core(s.two_state_vector())?;
        let mut families = Vec::with_capacity(count);
        for i in 0..count {
            let obs = core(s.observable(text(*names.add(i), "observable name")?))?;
            families.push(core(HistoryFamily::from_two_state(&tsv, obs))?);
        }
        let report = core(consistency_check(&core(merge_families(&families))?))?;
        *consistent = i32::from(report.consistent);
        *max_violation = report.max_violation;
        Ok(())
    })
}

/// Runs a seeded ensemble and returns the same JSON document as the
/// `simulate` subcommand. Free the result with `ppsq_string_free`.
///
/// # Safety
/// `s` must be a live handle, `open` NUL-terminated, `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn ppsq_simulate_json(
    s: *const PpsqScenario,
    open: *const c_char,
    runs: u64,
    seed: u64,
    out_json: *mut *mut c_char,
) -> PpsqStatus {
    guarded(|| {
        out_ptr(out_json, "out_json")?;
        let doc = core(simulate_document(
            scenario(s)?,
            text(open, "open")?,
            runs,
            seed,
        ))?;
        *out_json = CString::new(doc).expect("json has no nul").into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `p` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ppsq_string_free(p: *mut c_char) {
    if !p.is_null() {
        drop(CString::from_raw(p));
    }
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next API call on the same thread.
#[no_mangle]
pub extern "C" fn ppsq_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
