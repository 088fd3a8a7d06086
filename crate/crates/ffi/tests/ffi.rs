use std::ffi::{CStr, CString};
use std::ptr;

use randens_ffi::*;

fn parse(desc: &str) -> *mut RdSource {
    let c = CString::new(desc).unwrap();
    let mut h = ptr::null_mut();
    let st = unsafe { rd_source_parse(c.as_ptr(), &mut h) };
    assert_eq!(st, RdStatus::Ok, "{desc}: {}", last_error());
    assert!(!h.is_null());
    h
}

fn last_error() -> String {
    let p = rd_last_error_message();
    if p.is_null() {
        String::new()
    } else {
        unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
    }
}

fn geometry(h: *const RdSource, fam: RdFamily, p1: f64, p2: f64, method: RdMethod, mode: RdMode) -> (RdMetric, RdTensor) {
    let mut g = RdMetric::default();
    let mut t = RdTensor::default();
    let mut err = f64::NAN;
    let st = unsafe { rd_geometry(h, fam, p1, p2, method, mode, ptr::null(), &mut g, &mut t, &mut err) };
    assert_eq!(st, RdStatus::Ok, "{}", last_error());
    assert!(err.is_finite() && err >= 0.0);
    (g, t)
}

#[test]
fn parse_describe_free() {
    let h = parse("gaussian:mu=0,sigma=1");
    let mut needed = 0usize;
    let mut buf = [0 as std::ffi::c_char; 64];
    let st = unsafe { rd_source_describe(h, buf.as_mut_ptr(), buf.len(), &mut needed) };
    assert_eq!(st, RdStatus::Ok);
    let s = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap();
    assert!(s.starts_with("gaussian"), "{s}");
    assert_eq!(needed, s.len() + 1);

    let mut tiny = [1 as std::ffi::c_char; 4];
    unsafe { rd_source_describe(h, tiny.as_mut_ptr(), tiny.len(), ptr::null_mut()) };
    assert_eq!(tiny[3], 0);
    unsafe { rd_source_free(h) };
    unsafe { rd_source_free(ptr::null_mut()) };
}

#[test]
fn parse_errors_set_message() {
    let bad = CString::new("gaussian:mu=0,sigma=-1").unwrap();
    let mut h = ptr::null_mut();
    let st = unsafe { rd_source_parse(bad.as_ptr(), &mut h) };
    assert_ne!(st, RdStatus::Ok);
    assert!(h.is_null());
    assert!(last_error().contains("sigma"), "{}", last_error());

    let junk = CString::new("banana").unwrap();
    assert_eq!(unsafe { rd_source_parse(junk.as_ptr(), &mut h) }, RdStatus::Parse);
    assert_eq!(unsafe { rd_source_parse(ptr::null(), &mut h) }, RdStatus::NullPointer);
    assert_eq!(unsafe { rd_source_parse(junk.as_ptr(), ptr::null_mut()) }, RdStatus::NullPointer);

    let bytes = [0xffu8, 0];
    assert_eq!(unsafe { rd_source_parse(bytes.as_ptr().cast(), &mut h) }, RdStatus::InvalidUtf8);
}

#[test]
fn kernel_partial_values() {
    let mut v = 0.0;
    let st = unsafe { rd_kernel_partial(RdFamily::Heat, 1.0, 0.0, 0, 0, &mut v) };
    assert_eq!(st, RdStatus::Ok);
    assert_eq!(v, 1.0);
    let st = unsafe { rd_kernel_partial(RdFamily::Laplace, 2.0, 0.0, 0, 0, &mut v) };
    assert_eq!(st, RdStatus::Ok);
    assert!((v - 0.25).abs() < 1e-15);
    // h_x = -2x/(x² + w²)² at x = 1, w = 1
    unsafe { rd_kernel_partial(RdFamily::Laplace, 1.0, 1.0, 1, 0, &mut v) };
    assert!((v + 0.5).abs() < 1e-15);

    assert_eq!(unsafe { rd_kernel_partial(RdFamily::Heat, -1.0, 0.0, 0, 0, &mut v) }, RdStatus::Domain);
    assert_eq!(unsafe { rd_kernel_partial(RdFamily::Heat, 1.0, 0.0, 2, 2, &mut v) }, RdStatus::Domain);
}

#[test]
fn field_derivs_heat_gaussian() {
    let h = parse("gaussian:mu=0,sigma=1");
    let mut parts = [0.0; RD_N_PARTIALS];
    let mut err = 0.0;
    let st = unsafe { rd_field_derivs(h, RdFamily::Heat, 0.0, 0.5, ptr::null(), parts.as_mut_ptr(), &mut err) };
    assert_eq!(st, RdStatus::Ok, "{}", last_error());
    // u is the N(0, 1 + 2t) density at 0.
    let u = 1.0 / (2.0 * std::f64::consts::PI * 2.0).sqrt();
    assert!((parts[0] - u).abs() < 1e-10);
    // u_t = u_xx
    assert!((parts[2] - parts[3]).abs() < 1e-9);
    unsafe { rd_source_free(h) };
}

#[test]
fn geometry_improper_uniform_anchor() {
    let h = parse("improper-uniform");
    for t in [0.25, 0.5, 1.0] {
        for method in [RdMethod::Closed, RdMethod::Direct] {
            let (g, _) = geometry(h, RdFamily::Heat, 0.0, t, method, RdMode::Printed);
            assert!((g.g11 - 0.5 / t).abs() < 1e-7, "{method:?} {g:?}");
            assert!(g.g12.abs() < 1e-7);
            assert!((g.g22 - 0.5 / (t * t)).abs() < 1e-7);
        }
    }
    let (_, printed) = geometry(h, RdFamily::Heat, 0.0, 1.0, RdMethod::Closed, RdMode::Printed);
    let (_, corrected) = geometry(h, RdFamily::Heat, 0.0, 1.0, RdMethod::Closed, RdMode::Corrected);
    assert!((printed.t222 - corrected.t222 - 0.5).abs() < 1e-12);
    unsafe { rd_source_free(h) };
}

#[test]
fn corrected_closed_matches_direct() {
    let h = parse("cauchy:mu=0,gamma=1");
    let (gc, tc) = geometry(h, RdFamily::Laplace, 1.0, 0.5, RdMethod::Closed, RdMode::Corrected);
    let (gd, td) = geometry(h, RdFamily::Laplace, 1.0, 0.5, RdMethod::Direct, RdMode::Corrected);
    for (a, b) in [(gc.g11, gd.g11), (gc.g12, gd.g12), (gc.g22, gd.g22), (tc.t111, td.t111), (tc.t112, td.t112), (tc.t122, td.t122), (tc.t222, td.t222)] {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
    unsafe { rd_source_free(h) };
}

#[test]
fn geometry_optional_outputs_and_errors() {
    let h = parse("uniform:a=0,b=2");
    let mut g = RdMetric::default();
    let st = unsafe {
        rd_geometry(h, RdFamily::Heat, 0.0, 0.5, RdMethod::Direct, RdMode::Printed, ptr::null(), &mut g, ptr::null_mut(), ptr::null_mut())
    };
    assert_eq!(st, RdStatus::Ok);
    assert!(g.g11 > 0.0);

    let st = unsafe {
        rd_geometry(h, RdFamily::Heat, 0.0, -1.0, RdMethod::Closed, RdMode::Printed, ptr::null(), &mut g, ptr::null_mut(), ptr::null_mut())
    };
    assert_eq!(st, RdStatus::Domain);

    let mut cfg = rd_default_config();
    cfg.abs_tol = -1.0;
    let st = unsafe {
        rd_geometry(h, RdFamily::Heat, 0.0, 0.5, RdMethod::Closed, RdMode::Printed, &cfg, &mut g, ptr::null_mut(), ptr::null_mut())
    };
    assert_eq!(st, RdStatus::Config);

    let mut cfg = rd_default_config();
    cfg.max_subdivisions = 1;
    cfg.abs_tol = 1e-300;
    cfg.rel_tol = 1e-300;
    let st = unsafe {
        rd_geometry(h, RdFamily::Heat, 0.3, 0.05, RdMethod::Direct, RdMode::Printed, &cfg, &mut g, ptr::null_mut(), ptr::null_mut())
    };
    assert_eq!(st, RdStatus::NonConvergence, "{}", last_error());
    assert!(last_error().contains("metric"), "{}", last_error());

    assert_eq!(
        unsafe { rd_geometry(ptr::null(), RdFamily::Heat, 0.0, 1.0, RdMethod::Closed, RdMode::Printed, ptr::null(), &mut g, ptr::null_mut(), ptr::null_mut()) },
        RdStatus::NullPointer
    );
    unsafe { rd_source_free(h) };
}

#[test]
fn point_mass_is_degenerate() {
    let h = parse("pointmass:xi0=0.3");
    let (g, t) = geometry(h, RdFamily::Heat, 0.0, 1.0, RdMethod::Direct, RdMode::Printed);
    assert_eq!(g, RdMetric::default());
    assert_eq!(t, RdTensor::default());
    unsafe { rd_source_free(h) };
}

#[test]
fn pd_check_diag() {
    let g = RdMetric { g11: 2.0, g12: 0.0, g22: 1.0 };
    let (mut pd, mut l1, mut l2) = (false, 0.0, 0.0);
    assert_eq!(unsafe { rd_pd_check(&g, &mut pd, &mut l1, &mut l2) }, RdStatus::Ok);
    assert!(pd);
    assert_eq!((l1, l2), (2.0, 1.0));
    let g = RdMetric { g11: 1.0, g12: 2.0, g22: 1.0 };
    unsafe { rd_pd_check(&g, &mut pd, &mut l1, &mut l2) };
    assert!(!pd);
    assert_eq!(unsafe { rd_pd_check(ptr::null(), &mut pd, &mut l1, &mut l2) }, RdStatus::NullPointer);
}

#[test]
fn errors_are_thread_local() {
    let junk = CString::new("banana").unwrap();
    let mut h = ptr::null_mut();
    unsafe { rd_source_parse(junk.as_ptr(), &mut h) };
    let here = last_error();
    assert!(!here.is_empty());
    let there = std::thread::spawn(|| rd_last_error_message().is_null()).join().unwrap();
    assert!(there);
}
