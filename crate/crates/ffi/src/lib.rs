//! C interface to the `cavgate` gate compiler and simulator.
//!
//! Schedules live behind the opaque `CgSchedule` handle. Every call returns a
//! `CgStatus`; on failure `cg_last_error_message` describes what went wrong on
//! the calling thread. Strings handed out by the library are released with
//! `cg_string_free`.
//!
//! Every pointer argument must be null or valid for the access its function
//! describes; handles must come from this library and be freed once.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use cavgate::analysis::{truth_table, SimulationSetup};
use cavgate::hamiltonian::PhysicalParams;
use cavgate::ideal::apply_schedule_ideal;
use cavgate::schedule::{compile_nqubit, compile_toffoli, GateSchedule};
use cavgate::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Serialization = 4,
    Panic = 5,
}

/// Which gate to compile.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CgGateKind {
    /// n-qubit controlled phase gate.
    Phase = 0,
    /// n-qubit Toffoli gate (phase gate conjugated by target pulses).
    Toffoli = 1,
}

/// Opaque handle to a compiled gate schedule.
pub struct CgSchedule {
    inner: GateSchedule,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let clean = message.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).unwrap_or_default());
}

fn status_of(err: &Error) -> CgStatus {
    match err {
        Error::StepUnderflow { .. }
        | Error::TraceDrift { .. }
        | Error::NonFinite(_)
        | Error::NotHermitian(_)
        | Error::SectorViolation(_) => CgStatus::Numerical,
        Error::Serialization(_) => CgStatus::Serialization,
        _ => CgStatus::InvalidArgument,
    }
}

/// Runs `f`, converting library errors and panics into status codes.
fn guard<F>(f: F) -> CgStatus
where
    F: FnOnce() -> Result<(), CgStatus>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CgStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            CgStatus::Panic
        }
    }
}

fn fail(err: Error) -> CgStatus {
    set_error(&err.to_string());
    status_of(&err)
}

fn null(what: &str) -> CgStatus {
    set_error(&format!("{what} is null"));
    CgStatus::NullPointer
}

unsafe fn schedule_ref<'a>(handle: *const CgSchedule) -> Result<&'a GateSchedule, CgStatus> {
    handle.as_ref().map(|h| &h.inner).ok_or_else(|| null("schedule handle"))
}

fn write_out<T>(out: *mut T, value: T) -> Result<(), CgStatus> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    unsafe { out.write(value) };
    Ok(())
}

fn qubit_count(n: u32) -> Result<usize, CgStatus> {
    if !(2..=10).contains(&n) {
        set_error(&format!("qubit count must be between 2 and 10, got {n}"));
        return Err(CgStatus::InvalidArgument);
    }
    Ok(n as usize)
}

/// Compiles a gate on `n` qubits with the default physical parameters.
///
/// On success `*out` owns a new handle that must be released with
/// `cg_schedule_free`.
#[no_mangle]
pub unsafe extern "C" fn cg_schedule_compile(n: u32, kind: CgGateKind, out: *mut *mut CgSchedule) -> CgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let n = qubit_count(n)?;
        let params = PhysicalParams::reference_defaults(n);
        let inner = match kind {
            CgGateKind::Phase => compile_nqubit(n, &params),
            CgGateKind::Toffoli => compile_toffoli(n, &params),
        }
        .map_err(fail)?;
        out.write(Box::into_raw(Box::new(CgSchedule { inner })));
        Ok(())
    })
}

/// Restores a schedule from its JSON form.
#[no_mangle]
pub unsafe extern "C" fn cg_schedule_from_json(json: *const c_char, out: *mut *mut CgSchedule) -> CgStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| {
            set_error(&format!("json is not valid UTF-8: {e}"));
            CgStatus::InvalidArgument
        })?;
        let inner = GateSchedule::from_json(text).map_err(fail)?;
        out.write(Box::into_raw(Box::new(CgSchedule { inner })));
        Ok(())
    })
}

/// Releases a handle. Passing null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn cg_schedule_free(handle: *mut CgSchedule) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Serializes a schedule to JSON. Free the result with `cg_string_free`.
#[no_mangle]
pub unsafe extern "C" fn cg_schedule_to_json(handle: *const CgSchedule, out: *mut *mut c_char) -> CgStatus {
    guard(|| {
        let schedule = schedule_ref(handle)?;
        let text = schedule.to_json().map_err(fail)?;
        let c = CString::new(text).map_err(|e| {
            set_error(&e.to_string());
            CgStatus::Serialization
        })?;
        write_out(out, c.into_raw())
    })
}

/// Total gate time in seconds.
#[no_mangle]
pub unsafe extern "C" fn cg_schedule_duration(handle: *const CgSchedule, out_seconds: *mut f64) -> CgStatus {
    guard(|| {
        let schedule = schedule_ref(handle)?;
        write_out(out_seconds, schedule.total_duration())
    })
}

/// Number of basic operations (pulses and interactions, retuning gaps excluded).
#[no_mangle]
pub unsafe extern "C" fn cg_schedule_operation_count(handle: *const CgSchedule, out: *mut usize) -> CgStatus {
    guard(|| {
        let schedule = schedule_ref(handle)?;
        write_out(out, schedule.operation_count())
    })
}

/// Hilbert space dimension of the schedule's layout.
#[no_mangle]
pub unsafe extern "C" fn cg_schedule_dimension(handle: *const CgSchedule, out: *mut usize) -> CgStatus {
    guard(|| {
        let schedule = schedule_ref(handle)?;
        write_out(out, schedule.layout.dim())
    })
}

/// Runs every computational basis state through the ideal engine and reports
/// the largest deviation from a controlled phase flip and the largest leakage.
///
/// Only meaningful for phase-gate schedules; a Toffoli schedule reports a
/// non-diagonal table through a phase error of infinity.
#[no_mangle]
pub unsafe extern "C" fn cg_schedule_ideal_check(handle: *const CgSchedule, out_phase_error: *mut f64, out_leakage: *mut f64) -> CgStatus {
    guard(|| {
        let schedule = schedule_ref(handle)?;
        if out_phase_error.is_null() || out_leakage.is_null() {
            return Err(null("output pointer"));
        }
        let table = truth_table(&schedule.layout, |psi| apply_schedule_ideal(schedule, psi)).map_err(fail)?;
        let phase = if table.is_diagonal() { table.controlled_phase_error() } else { f64::INFINITY };
        out_phase_error.write(phase);
        out_leakage.write(table.max_leakage());
        Ok(())
    })
}

/// Noisy fidelity of the `n`-qubit phase gate with default parameters.
///
/// `dt_ns` lengthens every interaction, `c` sets the ancilla coupling to
/// `c·g`. `photon_cutoff` is the highest cavity Fock level kept.
#[no_mangle]
pub unsafe extern "C" fn cg_simulate_fidelity(n: u32, photon_cutoff: u32, dt_ns: f64, c: f64, out_fidelity: *mut f64) -> CgStatus {
    guard(|| {
        if out_fidelity.is_null() {
            return Err(null("output pointer"));
        }
        let n = qubit_count(n)?;
        if photon_cutoff == 0 {
            set_error("photon cutoff must be at least 1");
            return Err(CgStatus::InvalidArgument);
        }
        let setup = SimulationSetup {
            qubits: n,
            photon_cutoff: photon_cutoff as usize,
            params: PhysicalParams::reference_defaults(n),
            ..SimulationSetup::reference_defaults()
        };
        let outcome = setup.run(dt_ns * 1e-9, c).map_err(fail)?;
        out_fidelity.write(outcome.fidelity);
        Ok(())
    })
}

/// Message for the last failed call on this thread, or an empty string.
///
/// The pointer stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn cg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by the library. Passing null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn cg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    #[test]
    fn null_output_is_reported() {
        let status = unsafe { cg_schedule_compile(3, CgGateKind::Phase, ptr::null_mut()) };
        assert_eq!(status, CgStatus::NullPointer);
        let msg = unsafe { CStr::from_ptr(cg_last_error_message()) };
        assert!(msg.to_str().unwrap().contains("null"));
    }

    #[test]
    fn error_mapping() {
        assert_eq!(status_of(&Error::NonFinite("x".into())), CgStatus::Numerical);
        assert_eq!(status_of(&Error::Serialization("x".into())), CgStatus::Serialization);
        assert_eq!(status_of(&Error::InvalidParams("x".into())), CgStatus::InvalidArgument);
    }

    #[test]
    fn interior_nul_does_not_lose_the_message() {
        set_error("a\0b");
        let msg = unsafe { CStr::from_ptr(cg_last_error_message()) };
        assert_eq!(msg.to_str().unwrap(), "a b");
    }
}
