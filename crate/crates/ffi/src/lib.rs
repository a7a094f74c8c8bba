//! C ABI over the pflame scenario runner and the one-dimensional oracle.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `_free` function. Every call returns a [`PflameStatus`]; after a
//! failure, [`pflame_last_error`] yields the message for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use pflame::oracle::{oracle_reaction_integral, profile_quadrature};
use pflame::runner::{run_sweep, verify, write_outputs, SweepOutcome};
use pflame::scenario::ScenarioConfig;
use pflame::{lambda_star, Error, ReactionProfile};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PflameStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    Numerical = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// A validated scenario configuration.
pub struct PflameScenario {
    config: ScenarioConfig,
}

/// A finished continuation sweep with its per-stage diagnostics.
pub struct PflameSweep {
    outcome: SweepOutcome,
}

/// Per-stage numbers; missing diagnostics are NaN.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PflameStageSummary {
    pub eps: f64,
    pub h: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub max_grad_interior: f64,
    pub fb_points: usize,
    pub fb_mean_slope: f64,
    pub fb_max_rel_err: f64,
    pub reaction_concentration: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: PflameStatus, msg: impl Into<String>) -> PflameStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> PflameStatus {
    let status = match &e {
        Error::Config { .. } => PflameStatus::Config,
        Error::Io { .. } => PflameStatus::Io,
        Error::LinearSolve(_) | Error::Quadrature(_) | Error::NotConverged(_) => {
            PflameStatus::Numerical
        }
        _ => PflameStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> PflameStatus) -> PflameStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => {
            if status == PflameStatus::Ok {
                LAST_ERROR.with(|e| *e.borrow_mut() = None);
            }
            status
        }
        Err(_) => fail(PflameStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, PflameStatus> {
    if s.is_null() {
        return Err(fail(PflameStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        fail(
            PflameStatus::InvalidArgument,
            format!("{what} is not UTF-8"),
        )
    })
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(PflameStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

/// Copies the last error message of this thread into `buf` (NUL-terminated)
/// and returns the buffer size it needs, or 0 when there is no error. Nothing
/// is written when `buf` is null or `len` is too small.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn pflame_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buf.is_null() && len >= bytes.len() {
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, bytes.len());
            }
            bytes.len()
        }
    })
}

/// Loads and validates a scenario from a JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pflame_scenario_load(
    path: *const c_char,
    out: *mut *mut PflameScenario,
) -> PflameStatus {
    guard(|| {
        non_null!(out);
        let path = match read_str(path, "path") {
            Ok(p) => PathBuf::from(p),
            Err(s) => return s,
        };
        match ScenarioConfig::load(&path) {
            Ok(config) => {
                *out = Box::into_raw(Box::new(PflameScenario { config }));
                PflameStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Parses and validates a scenario from a JSON string.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pflame_scenario_from_json(
    json: *const c_char,
    out: *mut *mut PflameScenario,
) -> PflameStatus {
    guard(|| {
        non_null!(out);
        let text = match read_str(json, "json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match ScenarioConfig::from_json_str(text) {
            Ok(config) => {
                *out = Box::into_raw(Box::new(PflameScenario { config }));
                PflameStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// A copy of `scenario` with every grid spacing divided by `factor`.
///
/// # Safety
/// `scenario` must come from this library and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pflame_scenario_refined(
    scenario: *const PflameScenario,
    factor: usize,
    out: *mut *mut PflameScenario,
) -> PflameStatus {
    guard(|| {
        non_null!(scenario, out);
        let scenario = &*scenario;
        if factor == 0 {
            return fail(PflameStatus::InvalidArgument, "factor must be positive");
        }
        let config = scenario.config.refined(factor);
        *out = Box::into_raw(Box::new(PflameScenario { config }));
        PflameStatus::Ok
    })
}

/// # Safety
/// `scenario` must be null or come from this library, and not be used after.
#[no_mangle]
pub unsafe extern "C" fn pflame_scenario_free(scenario: *mut PflameScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs the continuation sweep. With `final_only`, earlier schedule entries
/// only warm-start the solve and a single stage is reported.
///
/// # Safety
/// `scenario` must come from this library and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pflame_sweep_run(
    scenario: *const PflameScenario,
    final_only: bool,
    out: *mut *mut PflameSweep,
) -> PflameStatus {
    guard(|| {
        non_null!(scenario, out);
        let scenario = &*scenario;
        match run_sweep(&scenario.config, final_only) {
            Ok(outcome) => {
                *out = Box::into_raw(Box::new(PflameSweep { outcome }));
                PflameStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `sweep` must be null or come from this library, and not be used after.
#[no_mangle]
pub unsafe extern "C" fn pflame_sweep_free(sweep: *mut PflameSweep) {
    if !sweep.is_null() {
        drop(Box::from_raw(sweep));
    }
}

/// # Safety
/// Pointers must be valid; `sweep` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn pflame_sweep_stage_count(
    sweep: *const PflameSweep,
    out: *mut usize,
) -> PflameStatus {
    guard(|| {
        non_null!(sweep, out);
        let sweep = &*sweep;
        *out = sweep.outcome.stages.len();
        PflameStatus::Ok
    })
}

/// Number of grid nodes, i.e. the length of every solution vector.
///
/// # Safety
/// Pointers must be valid; `sweep` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn pflame_sweep_node_count(
    sweep: *const PflameSweep,
    out: *mut usize,
) -> PflameStatus {
    guard(|| {
        non_null!(sweep, out);
        let sweep = &*sweep;
        *out = sweep.outcome.problem.grid().num_nodes();
        PflameStatus::Ok
    })
}

/// # Safety
/// Pointers must be valid; `sweep` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn pflame_sweep_stage_summary(
    sweep: *const PflameSweep,
    stage: usize,
    out: *mut PflameStageSummary,
) -> PflameStatus {
    guard(|| {
        non_null!(sweep, out);
        let sweep = &*sweep;
        let Some(s) = sweep.outcome.stages.get(stage) else {
            return fail(PflameStatus::InvalidArgument, format!("no stage {stage}"));
        };
        let nan = |v: Option<f64>| v.unwrap_or(f64::NAN);
        *out = PflameStageSummary {
            eps: s.row.eps,
            h: s.row.h,
            residual_norm: s.result.residual_norm,
            iterations: s.result.iterations,
            converged: s.result.converged,
            max_grad_interior: s.row.max_grad_interior,
            fb_points: s.free_boundary.points.len(),
            fb_mean_slope: nan(s.row.fb_mean_slope),
            fb_max_rel_err: nan(s.row.fb_max_rel_err),
            reaction_concentration: nan(s.row.reaction_concentration),
        };
        PflameStatus::Ok
    })
}

/// Copies the nodal solution of `stage` (x-fastest ordering) into `buf`.
///
/// # Safety
/// `buf` must be valid for `len` doubles; `sweep` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn pflame_sweep_solution(
    sweep: *const PflameSweep,
    stage: usize,
    buf: *mut f64,
    len: usize,
) -> PflameStatus {
    guard(|| {
        non_null!(sweep, buf);
        let sweep = &*sweep;
        let Some(s) = sweep.outcome.stages.get(stage) else {
            return fail(PflameStatus::InvalidArgument, format!("no stage {stage}"));
        };
        let v = s.result.u.values();
        if len < v.len() {
            return fail(
                PflameStatus::BufferTooSmall,
                format!("need {} values, got {len}", v.len()),
            );
        }
        std::ptr::copy_nonoverlapping(v.as_ptr(), buf, v.len());
        PflameStatus::Ok
    })
}

/// Runs the checks enabled in the scenario and reports how many passed and
/// failed.
///
/// # Safety
/// Pointers must be valid; `sweep` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn pflame_sweep_verify(
    sweep: *const PflameSweep,
    passed: *mut usize,
    failed: *mut usize,
) -> PflameStatus {
    guard(|| {
        non_null!(sweep, passed, failed);
        let sweep = &*sweep;
        let outcome = &sweep.outcome;
        match verify(outcome, &outcome.config.verify) {
            Ok(checks) => {
                let ok = checks.iter().filter(|c| c.passed).count();
                *passed = ok;
                *failed = checks.len() - ok;
                PflameStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Writes the CSV tables, plots and the scenario copy into `dir`.
///
/// # Safety
/// `dir` must be a NUL-terminated string; `sweep` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn pflame_sweep_write_outputs(
    sweep: *const PflameSweep,
    dir: *const c_char,
) -> PflameStatus {
    guard(|| {
        non_null!(sweep);
        let sweep = &*sweep;
        let dir = match read_str(dir, "dir") {
            Ok(d) => PathBuf::from(d),
            Err(s) => return s,
        };
        match write_outputs(&sweep.outcome, &dir, None) {
            Ok(_) => PflameStatus::Ok,
            Err(e) => from_error(e),
        }
    })
}

/// `((p / (p - 1)) mass)^(1/p)`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pflame_lambda_star(p: f64, mass: f64, out: *mut f64) -> PflameStatus {
    guard(|| {
        non_null!(out);
        match lambda_star(p, mass) {
            Ok(v) => {
                *out = v;
                PflameStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Reaction mass across the one-dimensional traveling layer for the
/// quadratic profile of the given mass.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pflame_oracle_reaction_integral(
    p: f64,
    mass: f64,
    eps: f64,
    out: *mut f64,
) -> PflameStatus {
    guard(|| {
        non_null!(out);
        let value = ReactionProfile::quadratic(mass)
            .and_then(|r| profile_quadrature(&r, p, eps, 1e-6 * eps))
            .and_then(|prof| oracle_reaction_integral(&prof));
        match value {
            Ok(v) => {
                *out = v;
                PflameStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
