//! C ABI over escape-core.
//!
//! Objects cross the boundary as opaque handles owned by the caller and released with
//! the matching `*_free`. Every fallible call returns an [`EscStatus`]; the message of the
//! most recent failure on the calling thread is available from [`esc_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use escape_core::config::{parse_problem, problem_to_text};
use escape_core::montecarlo::{estimate_escape, MCConfig};
use escape_core::solver::solve_escape_probability;
use escape_core::stable::stable_constant;
use escape_core::{Error, EscapeProblem, GridFunction, StabilityIndex};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EscStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Unsupported = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Escape problem handle.
pub struct EscProblem(EscapeProblem);

/// Solution on a uniform interior grid.
pub struct EscGrid(GridFunction);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> EscStatus {
    match e {
        Error::Config { .. } => EscStatus::Config,
        Error::Domain(_) => EscStatus::InvalidArgument,
        Error::Unsupported(_) => EscStatus::Unsupported,
        _ => EscStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (EscStatus, String)>) -> EscStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            EscStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            EscStatus::Panic
        }
    }
}

fn core<T>(r: escape_core::Result<T>) -> Result<T, (EscStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (EscStatus, String) {
    (EscStatus::NullPointer, format!("{what} is null"))
}

unsafe fn problem_ref<'a>(p: *const EscProblem) -> Result<&'a EscapeProblem, (EscStatus, String)> {
    p.as_ref().map(|h| &h.0).ok_or_else(|| null("problem"))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), (EscStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// NUL-terminated library version; static storage.
#[no_mangle]
pub extern "C" fn esc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copy the last error message of this thread into `buf` (NUL-terminated, truncated to fit).
/// Returns the full message length in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn esc_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Parse a problem from `key = value` text.
///
/// # Safety
/// `text` must be a valid NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn esc_problem_parse(text: *const c_char, out: *mut *mut EscProblem) -> EscStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let s = CStr::from_ptr(text).to_str().map_err(|_| (EscStatus::InvalidArgument, "text is not UTF-8".to_string()))?;
        let p = core(parse_problem(s))?;
        store(out, EscProblem(p))
    })
}

/// Unit Brownian motion plus ε-scaled α-stable noise on (−1, 1), escaping to the right.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn esc_problem_brownian(alpha: f64, epsilon: f64, out: *mut *mut EscProblem) -> EscStatus {
    guard(|| {
        let p = core(EscapeProblem::brownian_with_stable_noise(alpha, epsilon))?;
        store(out, EscProblem(p))
    })
}

/// Canonical text of `problem`, copied like [`esc_last_error`]. Returns the full length.
///
/// # Safety
/// `problem` must be a live handle; `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn esc_problem_text(problem: *const EscProblem, buf: *mut c_char, len: usize) -> usize {
    let Some(p) = problem.as_ref() else { return 0 };
    let text = problem_to_text(&p.0);
    if !buf.is_null() && len > 0 {
        let n = text.len().min(len - 1);
        ptr::copy_nonoverlapping(text.as_ptr(), buf as *mut u8, n);
        *buf.add(n) = 0;
    }
    text.len()
}

/// # Safety
/// `problem` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn esc_problem_free(problem: *mut EscProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Solve for the escape probability on `n` interior nodes.
///
/// # Safety
/// `problem` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn esc_solve(problem: *const EscProblem, n: usize, out: *mut *mut EscGrid) -> EscStatus {
    guard(|| {
        let p = problem_ref(problem)?;
        let (g, _) = core(solve_escape_probability(p, n))?;
        store(out, EscGrid(g))
    })
}

/// Number of interior nodes.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn esc_grid_len(grid: *const EscGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.n())
}

/// Copy nodes and values into arrays of length at least [`esc_grid_len`]. Either array may be null.
///
/// # Safety
/// `grid` must be a live handle; non-null arrays must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn esc_grid_copy(grid: *const EscGrid, xs: *mut f64, ps: *mut f64, len: usize) -> EscStatus {
    guard(|| {
        let g = &grid.as_ref().ok_or_else(|| null("grid"))?.0;
        if len < g.n() {
            return Err((EscStatus::BufferTooSmall, format!("need {} entries, got {len}", g.n())));
        }
        for i in 0..g.n() {
            if !xs.is_null() {
                *xs.add(i) = g.node(i);
            }
            if !ps.is_null() {
                *ps.add(i) = g.values()[i];
            }
        }
        Ok(())
    })
}

/// Piecewise-linear value at `x`, exterior constants outside the domain.
///
/// # Safety
/// `grid` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn esc_grid_eval(grid: *const EscGrid, x: f64, out: *mut f64) -> EscStatus {
    guard(|| {
        let g = &grid.as_ref().ok_or_else(|| null("grid"))?.0;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = g.eval(x);
        Ok(())
    })
}

/// # Safety
/// `grid` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn esc_grid_free(grid: *mut EscGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Monte Carlo estimate of the escape probability from `x0`; `t_max <= 0` selects the default horizon.
///
/// # Safety
/// `problem` must be a live handle; `p_hat` and `std_err` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn esc_mc_estimate(
    problem: *const EscProblem,
    x0: f64,
    n_paths: usize,
    dt: f64,
    t_max: f64,
    seed: u64,
    p_hat: *mut f64,
    std_err: *mut f64,
) -> EscStatus {
    guard(|| {
        let p = problem_ref(problem)?;
        if p_hat.is_null() || std_err.is_null() {
            return Err(null("output pointer"));
        }
        let cfg = MCConfig { n_paths, dt, t_max: (t_max > 0.0).then_some(t_max), seed, ..Default::default() };
        let e = core(estimate_escape(p, x0, &cfg))?;
        *p_hat = e.p_hat;
        *std_err = e.std_err;
        Ok(())
    })
}

/// C_{1,α}, the normalizing constant of the α-stable jump kernel.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn esc_stable_constant(alpha: f64, out: *mut f64) -> EscStatus {
    guard(|| {
        let a = core(StabilityIndex::new(alpha))?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = stable_constant(a);
        Ok(())
    })
}
