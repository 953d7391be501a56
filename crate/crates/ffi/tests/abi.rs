use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use escape_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    unsafe {
        esc_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn solve_through_handles() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(esc_problem_brownian(1.5, 0.0, &mut p), EscStatus::Ok);
        let mut g = ptr::null_mut();
        assert_eq!(esc_solve(p, 99, &mut g), EscStatus::Ok);
        let n = esc_grid_len(g);
        assert_eq!(n, 99);
        let mut xs = vec![0.0; n];
        let mut ps = vec![0.0; n];
        assert_eq!(esc_grid_copy(g, xs.as_mut_ptr(), ps.as_mut_ptr(), n), EscStatus::Ok);
        for (x, v) in xs.iter().zip(&ps) {
            assert!((v - (x + 1.0) / 2.0).abs() < 1e-10);
        }
        let mut v = 0.0;
        assert_eq!(esc_grid_eval(g, 2.0, &mut v), EscStatus::Ok);
        assert_eq!(v, 1.0);
        assert_eq!(esc_grid_copy(g, xs.as_mut_ptr(), ptr::null_mut(), 10), EscStatus::BufferTooSmall);
        assert!(last_error().contains("99"));
        esc_grid_free(g);
        esc_problem_free(p);
    }
}

#[test]
fn parse_errors_are_reported() {
    let bad = CString::new("drift.kind = zero\nnonsense\n").unwrap();
    let mut p = ptr::null_mut();
    let status = unsafe { esc_problem_parse(bad.as_ptr(), &mut p) };
    assert_eq!(status, EscStatus::Config);
    assert!(p.is_null());
    assert!(last_error().contains("line 2"));
    let needed = unsafe { esc_last_error(ptr::null_mut(), 0) };
    assert_eq!(needed, last_error().len());
}

#[test]
fn problem_text_round_trips() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(esc_problem_brownian(0.5, 0.01, &mut p), EscStatus::Ok);
        let len = esc_problem_text(p, ptr::null_mut(), 0);
        let mut buf = vec![0 as c_char; len + 1];
        assert_eq!(esc_problem_text(p, buf.as_mut_ptr(), buf.len()), len);
        let text = CStr::from_ptr(buf.as_ptr()).to_owned();
        let mut q = ptr::null_mut();
        assert_eq!(esc_problem_parse(text.as_ptr(), &mut q), EscStatus::Ok);
        let mut again = vec![0 as c_char; len + 1];
        esc_problem_text(q, again.as_mut_ptr(), again.len());
        assert_eq!(buf, again);
        esc_problem_free(p);
        esc_problem_free(q);
    }
}

#[test]
fn invalid_arguments_and_nulls() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(esc_problem_brownian(2.5, 0.1, &mut p), EscStatus::InvalidArgument);
        assert_eq!(esc_problem_brownian(1.5, 0.1, ptr::null_mut()), EscStatus::NullPointer);
        let mut g = ptr::null_mut();
        assert_eq!(esc_solve(ptr::null(), 10, &mut g), EscStatus::NullPointer);
        let mut c = 0.0;
        assert_eq!(esc_stable_constant(0.0, &mut c), EscStatus::InvalidArgument);
        assert_eq!(esc_stable_constant(1.0, &mut c), EscStatus::Ok);
        assert!((c - 1.0 / std::f64::consts::PI).abs() < 1e-14);
        esc_problem_free(ptr::null_mut());
        esc_grid_free(ptr::null_mut());
        assert_eq!(esc_grid_len(ptr::null()), 0);
    }
}

#[test]
fn monte_carlo_is_seeded() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(esc_problem_brownian(1.5, 0.1, &mut p), EscStatus::Ok);
        let (mut a, mut sa, mut b, mut sb) = (0.0, 0.0, 0.0, 0.0);
        assert_eq!(esc_mc_estimate(p, 0.0, 500, 2e-3, 0.0, 7, &mut a, &mut sa), EscStatus::Ok);
        assert_eq!(esc_mc_estimate(p, 0.0, 500, 2e-3, 0.0, 7, &mut b, &mut sb), EscStatus::Ok);
        assert_eq!(a.to_bits(), b.to_bits());
        assert!((a - 0.5).abs() < 4.0 * sa);
        assert_eq!(esc_mc_estimate(p, 3.0, 500, 2e-3, 0.0, 7, &mut a, &mut sa), EscStatus::InvalidArgument);
        esc_problem_free(p);
    }
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(esc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/escape.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["esc_solve", "esc_problem_parse", "esc_last_error", "esc_mc_estimate", "ESC_STATUS_PANIC"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(&src, format!("#include \"{}\"\nint main(void) {{ EscProblem *p = 0; return esc_problem_brownian(1.5, 0.1, &p) == ESC_STATUS_OK ? 0 : 1; }}\n", header.display())).unwrap();
    match Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).output() {
        Ok(out) => assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr)),
        Err(_) => eprintln!("no C compiler found; syntax check skipped"),
    }
}
