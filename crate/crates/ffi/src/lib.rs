//! C interface to the `heq` solver.
//!
//! Problems and trajectories are opaque handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call
//! returns a [`HeqStatus`]; on failure [`heq_last_error`] describes the
//! cause. Error messages are kept per thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use heq::oracle;
use heq::problem::{self, Assembled};
use heq::report;
use heq::schedule::{self, Outcome};
use heq::solver::{self, CertificateSpec, SolverError, Trajectory};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
    SolverError = 5,
    OracleError = 6,
    BufferTooSmall = 7,
    NotAvailable = 8,
    Panic = 9,
}

/// Schedule validation outcome.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeqOutcome {
    Pass = 0,
    Fail = 1,
    Inconsistent = 2,
}

/// A parsed and assembled problem.
pub struct HeqProblem(Assembled);

/// The result of a run.
pub struct HeqTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: HeqStatus, msg: impl Into<String>) -> HeqStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> HeqStatus) -> HeqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(HeqStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(s: *const c_char) -> Result<&'a str, HeqStatus> {
    if s.is_null() {
        return Err(fail(HeqStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(HeqStatus::InvalidUtf8, "argument is not valid UTF-8"))
}

fn solver_status(e: SolverError) -> HeqStatus {
    let status = match e {
        SolverError::InvalidStoppingRule(_) => HeqStatus::InvalidArgument,
        _ => HeqStatus::SolverError,
    };
    fail(status, e.to_string())
}

unsafe fn copy_point(src: &[f64], buf: *mut f64, len: usize) -> HeqStatus {
    if buf.is_null() {
        return fail(HeqStatus::NullPointer, "null output buffer");
    }
    if len < src.len() {
        return fail(
            HeqStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        );
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    HeqStatus::Ok
}

fn emit_problem(result: Result<Assembled, problem::ProblemError>, out: *mut *mut HeqProblem) -> HeqStatus {
    if out.is_null() {
        return fail(HeqStatus::NullPointer, "null output handle");
    }
    match result {
        Ok(a) => {
            // SAFETY: checked non-null above; the caller owns the slot.
            unsafe { *out = Box::into_raw(Box::new(HeqProblem(a))) };
            HeqStatus::Ok
        }
        Err(e) => fail(HeqStatus::ParseError, e.to_string()),
    }
}

/// Parses a problem file held in `src` (NUL-terminated TOML).
///
/// # Safety
/// `src` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn heq_problem_from_toml(src: *const c_char, out: *mut *mut HeqProblem) -> HeqStatus {
    guard(|| match str_arg(src) {
        Ok(s) => emit_problem(problem::load_str(s).map(|(_, a)| a), out),
        Err(status) => status,
    })
}

/// Loads one of the bundled presets by name.
///
/// # Safety
/// `name` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn heq_problem_from_preset(name: *const c_char, out: *mut *mut HeqProblem) -> HeqStatus {
    guard(|| match str_arg(name) {
        Ok(s) => emit_problem(problem::preset(s).and_then(|f| f.assemble()), out),
        Err(status) => status,
    })
}

/// # Safety
/// `p` must come from a `heq_problem_from_*` call, or be null.
#[no_mangle]
pub unsafe extern "C" fn heq_problem_free(p: *mut HeqProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Dimension of the problem, or 0 for a null handle.
///
/// # Safety
/// `p` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn heq_problem_dimension(p: *const HeqProblem) -> usize {
    p.as_ref().map_or(0, |p| p.0.problem.dim())
}

/// Overrides the iteration cap and disables the tolerance-based stops.
///
/// # Safety
/// `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn heq_problem_set_max_iters(p: *mut HeqProblem, max_iters: usize) -> HeqStatus {
    guard(|| {
        let Some(p) = p.as_mut() else {
            return fail(HeqStatus::NullPointer, "null problem");
        };
        if max_iters == 0 {
            return fail(HeqStatus::InvalidArgument, "max_iters must be at least 1");
        }
        p.0.stop = solver::StoppingRule::iterations(max_iters);
        HeqStatus::Ok
    })
}

/// Checks the schedules against the problem's theorem.
///
/// # Safety
/// `p` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn heq_validate(p: *const HeqProblem, out: *mut HeqOutcome) -> HeqStatus {
    guard(|| {
        let (Some(p), false) = (p.as_ref(), out.is_null()) else {
            return fail(HeqStatus::NullPointer, "null argument");
        };
        let a = &p.0;
        let Some(th) = a.theorem else {
            return fail(HeqStatus::NotAvailable, "the problem names no theorem");
        };
        match schedule::validate(&a.schedules, th, &a.gap, a.multiplier.norm()) {
            Ok(r) => {
                *out = match r.outcome() {
                    Outcome::Pass => HeqOutcome::Pass,
                    Outcome::Fail => HeqOutcome::Fail,
                    Outcome::Inconsistent => HeqOutcome::Inconsistent,
                };
                HeqStatus::Ok
            }
            Err(e) => fail(HeqStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Runs the iteration. With `certify` set, the certificate is evaluated
/// at the known solution (or the oracle's).
///
/// # Safety
/// `p` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn heq_run(p: *const HeqProblem, certify: bool, out: *mut *mut HeqTrajectory) -> HeqStatus {
    guard(|| {
        let (Some(p), false) = (p.as_ref(), out.is_null()) else {
            return fail(HeqStatus::NullPointer, "null argument");
        };
        let a = &p.0;
        let mut cfg = a.run.clone();
        if certify {
            let x_bar = match a.problem.known_solution() {
                Some(x) => x.clone(),
                None => match oracle::reference_solution(&a.problem) {
                    Ok(o) => o.solution,
                    Err(e) => return fail(HeqStatus::NotAvailable, format!("no solution to certify against: {e}")),
                },
            };
            cfg.certificate = Some(CertificateSpec {
                x_bar,
                multiplier: a.multiplier.clone(),
                rho: solver::lemma_rho(a.problem.upper()),
            });
        }
        match solver::run(&a.problem, &a.schedules, &a.x1, a.x0.as_ref(), &cfg, &a.stop) {
            Ok(t) => {
                *out = Box::into_raw(Box::new(HeqTrajectory(t)));
                HeqStatus::Ok
            }
            Err(e) => solver_status(e),
        }
    })
}

/// # Safety
/// `t` must come from [`heq_run`], or be null.
#[no_mangle]
pub unsafe extern "C" fn heq_trajectory_free(t: *mut HeqTrajectory) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// # Safety
/// `t` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn heq_trajectory_iterations(t: *const HeqTrajectory) -> usize {
    t.as_ref().map_or(0, |t| t.0.iterations())
}

/// Copies the last iterate into `buf` (`len` ≥ dimension).
///
/// # Safety
/// `t` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn heq_trajectory_final_point(t: *const HeqTrajectory, buf: *mut f64, len: usize) -> HeqStatus {
    guard(|| match t.as_ref() {
        Some(t) => copy_point(t.0.final_point.as_slice(), buf, len),
        None => fail(HeqStatus::NullPointer, "null trajectory"),
    })
}

/// Copies the weighted ergodic average into `buf`.
///
/// # Safety
/// `t` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn heq_trajectory_ergodic_average(t: *const HeqTrajectory, buf: *mut f64, len: usize) -> HeqStatus {
    guard(|| match t.as_ref() {
        Some(t) => match &t.0.ergodic_average {
            Some(e) => copy_point(e.as_slice(), buf, len),
            None => fail(HeqStatus::NotAvailable, "no ergodic average"),
        },
        None => fail(HeqStatus::NullPointer, "null trajectory"),
    })
}

/// Smallest certificate value; `NotAvailable` unless the run certified.
///
/// # Safety
/// `t` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn heq_trajectory_certificate_min(t: *const HeqTrajectory, out: *mut f64) -> HeqStatus {
    guard(|| {
        let (Some(t), false) = (t.as_ref(), out.is_null()) else {
            return fail(HeqStatus::NullPointer, "null argument");
        };
        match t.0.certificate_min() {
            Some(m) => {
                *out = m;
                HeqStatus::Ok
            }
            None => fail(HeqStatus::NotAvailable, "the run was not certified"),
        }
    })
}

/// The per-iteration CSV as a new string; release it with
/// [`heq_string_free`].
///
/// # Safety
/// `t` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn heq_trajectory_csv(t: *const HeqTrajectory, out: *mut *mut c_char) -> HeqStatus {
    guard(|| {
        let (Some(t), false) = (t.as_ref(), out.is_null()) else {
            return fail(HeqStatus::NullPointer, "null argument");
        };
        match CString::new(report::trajectory_csv(&t.0)) {
            Ok(s) => {
                *out = s.into_raw();
                HeqStatus::Ok
            }
            Err(_) => fail(HeqStatus::SolverError, "CSV contains a NUL byte"),
        }
    })
}

/// Reference solution from the independent oracle.
///
/// # Safety
/// `p` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn heq_oracle_solution(p: *const HeqProblem, buf: *mut f64, len: usize) -> HeqStatus {
    guard(|| {
        let Some(p) = p.as_ref() else {
            return fail(HeqStatus::NullPointer, "null problem");
        };
        match oracle::reference_solution(&p.0.problem) {
            Ok(o) => copy_point(o.solution.as_slice(), buf, len),
            Err(e) => fail(HeqStatus::OracleError, e.to_string()),
        }
    })
}

/// # Safety
/// `s` must come from this library, or be null.
#[no_mangle]
pub unsafe extern "C" fn heq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn heq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn heq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
