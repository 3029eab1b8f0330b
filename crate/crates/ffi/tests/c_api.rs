use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use failover_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(fo_last_error()) }.to_string_lossy().into_owned()
}

fn att_world() -> *mut FoWorld {
    let mut w = ptr::null_mut();
    assert_eq!(unsafe { fo_world_load(ptr::null(), ptr::null(), &mut w) }, FoStatus::Ok);
    assert!(!w.is_null());
    w
}

fn build(w: *const FoWorld, failed: &[u32], q: f64) -> (FoStatus, *mut FoInstance) {
    let mut inst = ptr::null_mut();
    let s = unsafe { fo_instance_build(w, failed.as_ptr(), failed.len(), q, &mut inst) };
    (s, inst)
}

#[test]
fn single_failure_round_trip() {
    let w = att_world();
    let (s, inst) = build(w, &[20], 1.0);
    assert_eq!(s, FoStatus::Ok);
    let (mut n, mut m, mut l, mut q) = (0, 0, 0, 0);
    assert_eq!(unsafe { fo_instance_dims(inst, &mut n, &mut m, &mut l, &mut q) }, FoStatus::Ok);
    assert_eq!((n, m), (2, 5));
    assert_eq!(l as u32, q);

    for alg in [FoAlgorithm::Exact, FoAlgorithm::Retroflow] {
        let mut sol = ptr::null_mut();
        assert_eq!(unsafe { fo_solve(inst, alg as u32, 1_000_000, 10_000, &mut sol) }, FoStatus::Ok);
        let mut obj = 0.0;
        assert_eq!(unsafe { fo_solution_objective(sol, &mut obj) }, FoStatus::Ok);
        assert!(obj > 0.0);
        let mut assign = vec![0i32; n];
        assert_eq!(unsafe { fo_solution_assignment(sol, assign.as_mut_ptr(), n) }, FoStatus::Ok);
        assert!(assign.iter().all(|&a| (0..m as i32).contains(&a)));
        let mut feasible = -1;
        assert_eq!(unsafe { fo_validate(inst, sol, &mut feasible) }, FoStatus::Ok);
        assert_eq!(feasible, 1);
        let mut short = vec![0i32; n - 1];
        assert_eq!(
            unsafe { fo_solution_assignment(sol, short.as_mut_ptr(), n - 1) },
            FoStatus::InvalidArgument
        );
        unsafe { fo_solution_free(sol) };
    }

    let mut nearest = ptr::null_mut();
    assert_eq!(unsafe { fo_solve(inst, FoAlgorithm::Nearest as u32, 1, 1, &mut nearest) }, FoStatus::Ok);
    let mut feasible = -1;
    unsafe { fo_validate(inst, nearest, &mut feasible) };
    assert_eq!(feasible, 0);
    assert!(last_error().contains("capacity: FAIL"));
    unsafe {
        fo_solution_free(nearest);
        fo_instance_free(inst);
        fo_world_free(w);
    }
}

#[test]
fn json_round_trip() {
    let w = att_world();
    let (_, inst) = build(w, &[2], 0.5);
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { fo_instance_to_json(inst, &mut text) }, FoStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { fo_instance_from_json(text, &mut back) }, FoStatus::Ok);
    let mut sol = ptr::null_mut();
    unsafe { fo_solve(back, FoAlgorithm::Retroflow as u32, 1, 1, &mut sol) };
    let mut sol_json = ptr::null_mut();
    assert_eq!(unsafe { fo_solution_to_json(sol, &mut sol_json) }, FoStatus::Ok);
    let s = unsafe { CStr::from_ptr(sol_json) }.to_str().unwrap();
    assert!(s.contains("\"objective\""));
    unsafe {
        fo_string_free(text);
        fo_string_free(sol_json);
        fo_solution_free(sol);
        fo_instance_free(back);
        fo_instance_free(inst);
        fo_world_free(w);
    }
}

#[test]
fn double_failure_is_infeasible() {
    let w = att_world();
    let (_, inst) = build(w, &[2, 5], 1.0);
    let mut sol = ptr::null_mut();
    let s = unsafe { fo_solve(inst, FoAlgorithm::Exact as u32, 100_000_000, 60_000, &mut sol) };
    assert_eq!(s, FoStatus::Infeasible);
    assert!(sol.is_null());
    unsafe {
        fo_instance_free(inst);
        fo_world_free(w);
    }
}

#[test]
fn errors_are_reported() {
    let w = att_world();
    let (s, inst) = build(w, &[99], 1.0);
    assert_eq!(s, FoStatus::InvalidArgument);
    assert!(inst.is_null());
    assert!(last_error().contains("unknown controller 99"));

    let (s, _) = build(w, &[2, 5, 6, 13, 20, 22], 1.0);
    assert_eq!(s, FoStatus::InvalidArgument);

    let bad = CString::new("{\"offline_switches\": [").unwrap();
    let mut inst = ptr::null_mut();
    assert_eq!(unsafe { fo_instance_from_json(bad.as_ptr(), &mut inst) }, FoStatus::ParseError);
    assert_eq!(unsafe { fo_instance_from_json(ptr::null(), &mut inst) }, FoStatus::NullPointer);

    let topo = CString::new("[[nodes]]\nid = 0\nlatitude = 95.0\nlongitude = 0.0\n").unwrap();
    let place = CString::new("").unwrap();
    let mut w2 = ptr::null_mut();
    assert_eq!(unsafe { fo_world_load(topo.as_ptr(), place.as_ptr(), &mut w2) }, FoStatus::InvalidArgument);
    assert!(w2.is_null());

    let mut sol = ptr::null_mut();
    let (_, inst) = build(w, &[2], 1.0);
    assert_eq!(unsafe { fo_solve(inst, 9, 1, 1, &mut sol) }, FoStatus::InvalidArgument);
    assert_eq!(unsafe { fo_solve(inst, 0, 0, 1, &mut sol) }, FoStatus::InvalidArgument);
    assert_eq!(unsafe { fo_solve(ptr::null(), 0, 1, 1, &mut sol) }, FoStatus::NullPointer);
    unsafe {
        fo_instance_free(inst);
        fo_world_free(w);
        fo_world_free(ptr::null_mut());
        fo_string_free(ptr::null_mut());
    }
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(fo_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/failover.h");
    assert!(header.exists());
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .status()
    else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(status.success());
}
