//! C ABI over the core library: opaque handles, status codes, and a
//! thread-local last-error message. Pattern text, instance parameters, and
//! solve reports cross the boundary; everything else stays behind the
//! handles. The header is generated into `include/girg_motifs.h` at build
//! time.

use girg_motifs::counting::{count_ordered, Mode};
use girg_motifs::girg::{sample_girg, Gamma, GirgGraph, GirgParams};
use girg_motifs::milp::{solve_instance, MilpError, OptInstance, SolveReport, Uniqueness};
use girg_motifs::pattern::{parse_pattern, Pattern};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmStatus {
    GmOk = 0,
    GmInvalidArgument = 1,
    GmParseError = 2,
    GmSolveError = 3,
    GmBudgetExceeded = 4,
    GmPanic = 5,
}

/// Opaque pattern handle.
pub struct GmPattern(Pattern);
/// Opaque sampled-instance handle.
pub struct GmGraph(GirgGraph);
/// Opaque solve-report handle.
pub struct GmReport(SolveReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let cleaned = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(cleaned).unwrap_or_default();
    });
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

fn guard<F: FnOnce() -> GmStatus>(f: F) -> GmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            GmStatus::GmPanic
        }
    }
}

fn gamma_from(raw: f64) -> Result<Gamma, String> {
    if raw.is_infinite() && raw > 0.0 {
        Ok(Gamma::Infinite)
    } else if raw.is_finite() && raw > 1.0 {
        Ok(Gamma::Finite(raw))
    } else {
        Err(format!("gamma must be finite > 1 or +infinity, got {raw}"))
    }
}

/// Parses the `k=<int>; edges=<i>-<j>,...` grammar into a pattern handle.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gm_pattern_parse(text: *const c_char, out: *mut *mut GmPattern) -> GmStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            set_error("null pointer argument");
            return GmStatus::GmInvalidArgument;
        }
        let text = match unsafe { CStr::from_ptr(text) }.to_str() {
            Ok(t) => t,
            Err(_) => {
                set_error("pattern text is not valid UTF-8");
                return GmStatus::GmInvalidArgument;
            }
        };
        match parse_pattern(text) {
            Ok(p) => {
                unsafe { *out = Box::into_raw(Box::new(GmPattern(p))) };
                GmStatus::GmOk
            }
            Err(e) => {
                set_error(&e.to_string());
                GmStatus::GmParseError
            }
        }
    })
}

/// # Safety
/// `p` must come from `gm_pattern_parse` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gm_pattern_free(p: *mut GmPattern) {
    if !p.is_null() {
        drop(unsafe { Box::from_raw(p) });
    }
}

/// # Safety
/// `p` must be a live pattern handle.
#[no_mangle]
pub unsafe extern "C" fn gm_pattern_k(p: *const GmPattern) -> usize {
    if p.is_null() {
        return 0;
    }
    unsafe { &*p }.0.k()
}

/// # Safety
/// `p` must be a live pattern handle.
#[no_mangle]
pub unsafe extern "C" fn gm_pattern_edge_count(p: *const GmPattern) -> usize {
    if p.is_null() {
        return 0;
    }
    unsafe { &*p }.0.edge_count()
}

/// Samples one instance. `gamma` may be +infinity for the threshold kernel.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gm_girg_sample(
    n: usize,
    d: usize,
    tau: f64,
    gamma: f64,
    seed: u64,
    out: *mut *mut GmGraph,
) -> GmStatus {
    guard(|| {
        if out.is_null() {
            set_error("null pointer argument");
            return GmStatus::GmInvalidArgument;
        }
        let gamma = match gamma_from(gamma) {
            Ok(g) => g,
            Err(msg) => {
                set_error(&msg);
                return GmStatus::GmInvalidArgument;
            }
        };
        match sample_girg(&GirgParams { n, d, tau, gamma, seed }) {
            Ok(g) => {
                unsafe { *out = Box::into_raw(Box::new(GmGraph(g))) };
                GmStatus::GmOk
            }
            Err(e) => {
                set_error(&e.to_string());
                GmStatus::GmInvalidArgument
            }
        }
    })
}

/// # Safety
/// `g` must come from `gm_girg_sample` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gm_girg_free(g: *mut GmGraph) {
    if !g.is_null() {
        drop(unsafe { Box::from_raw(g) });
    }
}

/// # Safety
/// `g` must be a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn gm_girg_num_edges(g: *const GmGraph) -> u64 {
    if g.is_null() {
        return 0;
    }
    unsafe { &*g }.0.graph.num_edges() as u64
}

/// # Safety
/// `g` must be a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn gm_girg_mean_degree(g: *const GmGraph) -> f64 {
    if g.is_null() {
        return f64::NAN;
    }
    unsafe { &*g }.0.mean_degree()
}

/// Ordered occurrences of the pattern in the sampled graph.
/// `induced` zero counts general containment, nonzero exact equality.
///
/// # Safety
/// `g` and `p` must be live handles; `out_count` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gm_count_ordered(
    g: *const GmGraph,
    p: *const GmPattern,
    induced: i32,
    out_count: *mut u64,
) -> GmStatus {
    guard(|| {
        if g.is_null() || p.is_null() || out_count.is_null() {
            set_error("null pointer argument");
            return GmStatus::GmInvalidArgument;
        }
        let mode = if induced != 0 { Mode::Induced } else { Mode::General };
        match count_ordered(&unsafe { &*g }.0.graph, &unsafe { &*p }.0, mode) {
            Ok(count) => {
                unsafe { *out_count = count };
                GmStatus::GmOk
            }
            Err(e) => {
                set_error(&e.to_string());
                GmStatus::GmSolveError
            }
        }
    })
}

/// Solves the dominant-structure program and certifies uniqueness.
///
/// # Safety
/// `p` must be a live pattern handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gm_solve(
    p: *const GmPattern,
    tau: f64,
    gamma: f64,
    d: usize,
    induced: i32,
    out: *mut *mut GmReport,
) -> GmStatus {
    guard(|| {
        if p.is_null() || out.is_null() {
            set_error("null pointer argument");
            return GmStatus::GmInvalidArgument;
        }
        let gamma = match gamma_from(gamma) {
            Ok(g) => g,
            Err(msg) => {
                set_error(&msg);
                return GmStatus::GmInvalidArgument;
            }
        };
        let inst = OptInstance {
            pattern: unsafe { &*p }.0.clone(),
            tau,
            gamma,
            dim: d,
            variant: if induced != 0 { Mode::Induced } else { Mode::General },
        };
        match solve_instance(&inst) {
            Ok(report) => {
                unsafe { *out = Box::into_raw(Box::new(GmReport(report))) };
                GmStatus::GmOk
            }
            Err(e) => {
                set_error(&e.to_string());
                match e {
                    MilpError::BudgetExceeded { .. } => GmStatus::GmBudgetExceeded,
                    MilpError::InvalidInstance(_) | MilpError::DimensionMismatch { .. } => {
                        GmStatus::GmInvalidArgument
                    }
                    _ => GmStatus::GmSolveError,
                }
            }
        }
    })
}

/// # Safety
/// `r` must come from `gm_solve` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gm_report_free(r: *mut GmReport) {
    if !r.is_null() {
        drop(unsafe { Box::from_raw(r) });
    }
}

/// # Safety
/// `r` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn gm_report_f_star(r: *const GmReport) -> f64 {
    if r.is_null() {
        return f64::NAN;
    }
    unsafe { &*r }.0.f_star
}

/// 0 unique, 1 non-unique, 2 tolerance-ambiguous, -1 on a null handle.
///
/// # Safety
/// `r` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn gm_report_uniqueness(r: *const GmReport) -> i32 {
    if r.is_null() {
        return -1;
    }
    match unsafe { &*r }.0.unique {
        Uniqueness::Unique => 0,
        Uniqueness::NonUnique => 1,
        Uniqueness::ToleranceAmbiguous => 2,
    }
}

/// Weight exponent of vertex `i` (1-based); NaN when out of range.
///
/// # Safety
/// `r` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn gm_report_alpha(r: *const GmReport, i: usize) -> f64 {
    if r.is_null() {
        return f64::NAN;
    }
    let report = &unsafe { &*r }.0;
    if i == 0 || i > report.pattern.k() {
        return f64::NAN;
    }
    report.optimizer.alpha[i - 1]
}

/// Distance exponent of the pair `{i, j}` (1-based); NaN when out of range.
///
/// # Safety
/// `r` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn gm_report_beta(r: *const GmReport, i: usize, j: usize) -> f64 {
    if r.is_null() {
        return f64::NAN;
    }
    let report = &unsafe { &*r }.0;
    let k = report.pattern.k();
    if i == 0 || j == 0 || i > k || j > k || i == j {
        return f64::NAN;
    }
    report.optimizer.beta_at(k, i, j)
}

/// Full report as a JSON string; free it with `gm_string_free`.
///
/// # Safety
/// `r` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn gm_report_json(r: *const GmReport) -> *mut c_char {
    if r.is_null() {
        return ptr::null_mut();
    }
    let json = unsafe { &*r }.0.to_json().to_string();
    CString::new(json).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// # Safety
/// `s` must come from `gm_report_json` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
