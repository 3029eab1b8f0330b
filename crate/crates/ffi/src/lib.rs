//! C interface to `failover-core`.
//!
//! Objects are opaque handles released with their `*_free` function. Every
//! entry point returns an [`FoStatus`]; on failure [`fo_last_error`] gives a
//! message for the calling thread. Strings returned through out-parameters
//! are owned by the caller and released with [`fo_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use failover_core::domains::{load_placement, FailureScenario};
use failover_core::geo::{load_topology, NodeId};
use failover_core::oscm::{build_instance, validate, OscmInstance, Solution};
use failover_core::solvers::{solve, Algorithm, Outcome, SolverBudget};
use failover_core::world::{Config, World};
use failover_core::{fixtures, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoStatus {
    Ok = 0,
    /// No assignment satisfies the constraints.
    Infeasible = 1,
    InvalidArgument = 2,
    ParseError = 3,
    IoError = 4,
    /// Search budget ran out without a feasible solution.
    Inconclusive = 5,
    NullPointer = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoAlgorithm {
    Exact = 0,
    Retroflow = 1,
    Nearest = 2,
}

pub struct FoWorld(World);
pub struct FoInstance(OscmInstance);
pub struct FoSolution(Solution);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> FoStatus {
    match e {
        Error::Io { .. } => FoStatus::IoError,
        Error::Parse { .. } | Error::UnknownFormat(_) => FoStatus::ParseError,
        Error::Inconclusive { .. } => FoStatus::Inconclusive,
        _ => FoStatus::InvalidArgument,
    }
}

/// Runs `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<FoStatus, (FoStatus, String)>) -> FoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            FoStatus::Panic
        }
    }
}

fn fail(e: Error) -> (FoStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (FoStatus, String) {
    (FoStatus::NullPointer, format!("{what} is null"))
}

unsafe fn opt_str<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, (FoStatus, String)> {
    if p.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Some)
        .map_err(|_| (FoStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn req_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (FoStatus, String)> {
    opt_str(p, what)?.ok_or_else(|| null(what))
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s).expect("json has no nul bytes").into_raw()
}

/// Message of the last failed call on this thread. Valid until the next
/// failing call; never null.
#[no_mangle]
pub extern "C" fn fo_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn fo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a topology and placement from TOML text. Passing null for both
/// selects the bundled AttMpls network and its six-controller placement.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fo_world_load(
    topology_toml: *const c_char,
    placement_toml: *const c_char,
    out: *mut *mut FoWorld,
) -> FoStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let t = opt_str(topology_toml, "topology")?;
        let p = opt_str(placement_toml, "placement")?;
        let (t, p) = match (t, p) {
            (None, None) => {
                let t = fixtures::att_topology();
                let p = fixtures::att_placement(&t);
                (t, p)
            }
            (Some(t), Some(p)) => {
                let t = load_topology(t).map_err(fail)?;
                let p = load_placement(p, &t).map_err(fail)?;
                (t, p)
            }
            _ => return Err((FoStatus::InvalidArgument, "give both documents or neither".into())),
        };
        let w = World::new(t, p, Config::default()).map_err(fail)?;
        *out = Box::into_raw(Box::new(FoWorld(w)));
        Ok(FoStatus::Ok)
    })
}

/// Builds the instance for the failure of `failed[0..n_failed]`.
///
/// # Safety
/// `world` must come from [`fo_world_load`]; `failed` must point to
/// `n_failed` ids; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fo_instance_build(
    world: *const FoWorld,
    failed: *const u32,
    n_failed: usize,
    q_fraction: f64,
    out: *mut *mut FoInstance,
) -> FoStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let w = &world.as_ref().ok_or_else(|| null("world"))?.0;
        if failed.is_null() && n_failed > 0 {
            return Err(null("failed"));
        }
        let ids = if n_failed == 0 { &[][..] } else { std::slice::from_raw_parts(failed, n_failed) };
        let s = FailureScenario::new(w.placement(), ids.iter().map(|&c| NodeId(c))).map_err(fail)?;
        let inst = build_instance(w, &s, q_fraction).map_err(fail)?;
        *out = Box::into_raw(Box::new(FoInstance(inst)));
        Ok(FoStatus::Ok)
    })
}

/// # Safety
/// `json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fo_instance_from_json(json: *const c_char, out: *mut *mut FoInstance) -> FoStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let inst = OscmInstance::from_json(req_str(json, "json")?).map_err(fail)?;
        *out = Box::into_raw(Box::new(FoInstance(inst)));
        Ok(FoStatus::Ok)
    })
}

/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fo_instance_to_json(inst: *const FoInstance, out: *mut *mut c_char) -> FoStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inst = &inst.as_ref().ok_or_else(|| null("instance"))?.0;
        *out = to_c_string(inst.to_json());
        Ok(FoStatus::Ok)
    })
}

/// Offline switches, active controllers, flows and required flow count.
///
/// # Safety
/// `inst` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn fo_instance_dims(
    inst: *const FoInstance,
    n: *mut usize,
    m: *mut usize,
    l: *mut usize,
    q: *mut u32,
) -> FoStatus {
    guard(|| {
        let inst = &inst.as_ref().ok_or_else(|| null("instance"))?.0;
        if n.is_null() || m.is_null() || l.is_null() || q.is_null() {
            return Err(null("out"));
        }
        (*n, *m, *l, *q) = (inst.n(), inst.m(), inst.l(), inst.q());
        Ok(FoStatus::Ok)
    })
}

/// Solves with `algorithm` (an [`FoAlgorithm`] value). Returns
/// `FO_STATUS_INFEASIBLE` with `*out` null when the exact solver proves
/// infeasibility.
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fo_solve(
    inst: *const FoInstance,
    algorithm: u32,
    max_nodes: u64,
    time_limit_ms: u64,
    out: *mut *mut FoSolution,
) -> FoStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let inst = &inst.as_ref().ok_or_else(|| null("instance"))?.0;
        let alg = match algorithm {
            x if x == FoAlgorithm::Exact as u32 => Algorithm::Exact,
            x if x == FoAlgorithm::Retroflow as u32 => Algorithm::Retroflow,
            x if x == FoAlgorithm::Nearest as u32 => Algorithm::Nearest,
            other => return Err((FoStatus::InvalidArgument, format!("unknown algorithm {other}"))),
        };
        let budget = SolverBudget::new(max_nodes, time_limit_ms).map_err(fail)?;
        match solve(alg, inst, budget).map_err(fail)? {
            Outcome::Infeasible => {
                set_error("no feasible assignment");
                Ok(FoStatus::Infeasible)
            }
            Outcome::Solved { solution, .. } => {
                *out = Box::into_raw(Box::new(FoSolution(solution)));
                Ok(FoStatus::Ok)
            }
        }
    })
}

/// # Safety
/// `sol` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fo_solution_objective(sol: *const FoSolution, out: *mut f64) -> FoStatus {
    guard(|| {
        let sol = &sol.as_ref().ok_or_else(|| null("solution"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = sol.objective;
        Ok(FoStatus::Ok)
    })
}

/// Writes, per offline switch, the index of its controller or -1 for
/// legacy mode. `len` must equal the switch count.
///
/// # Safety
/// `sol` must be a live handle; `out` must hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn fo_solution_assignment(sol: *const FoSolution, out: *mut i32, len: usize) -> FoStatus {
    guard(|| {
        let sol = &sol.as_ref().ok_or_else(|| null("solution"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let assign = sol
            .assignment()
            .ok_or_else(|| (FoStatus::InvalidArgument, "switch mapped twice".to_string()))?;
        if len != assign.len() {
            return Err((
                FoStatus::InvalidArgument,
                format!("buffer holds {len} entries, need {}", assign.len()),
            ));
        }
        let dst = std::slice::from_raw_parts_mut(out, len);
        for (d, a) in dst.iter_mut().zip(assign) {
            *d = a.map_or(-1, |j| j as i32);
        }
        Ok(FoStatus::Ok)
    })
}

/// # Safety
/// `sol` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fo_solution_to_json(sol: *const FoSolution, out: *mut *mut c_char) -> FoStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let sol = &sol.as_ref().ok_or_else(|| null("solution"))?.0;
        *out = to_c_string(sol.to_json());
        Ok(FoStatus::Ok)
    })
}

/// Sets `*feasible` to 1 when `sol` meets every constraint of `inst`, else 0.
///
/// # Safety
/// Both handles must be live; `feasible` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fo_validate(inst: *const FoInstance, sol: *const FoSolution, feasible: *mut i32) -> FoStatus {
    guard(|| {
        let inst = &inst.as_ref().ok_or_else(|| null("instance"))?.0;
        let sol = &sol.as_ref().ok_or_else(|| null("solution"))?.0;
        if feasible.is_null() {
            return Err(null("feasible"));
        }
        let report = validate(inst, sol);
        *feasible = report.feasible() as i32;
        if !report.feasible() {
            set_error(&report.to_string());
        }
        Ok(FoStatus::Ok)
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn fo_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `w` must be null or a live handle, freed once.
#[no_mangle]
pub unsafe extern "C" fn fo_world_free(w: *mut FoWorld) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// # Safety
/// `i` must be null or a live handle, freed once.
#[no_mangle]
pub unsafe extern "C" fn fo_instance_free(i: *mut FoInstance) {
    if !i.is_null() {
        drop(Box::from_raw(i));
    }
}

/// # Safety
/// `s` must be null or a live handle, freed once.
#[no_mangle]
pub unsafe extern "C" fn fo_solution_free(s: *mut FoSolution) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}
