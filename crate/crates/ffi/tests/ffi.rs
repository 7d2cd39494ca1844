use std::ffi::{c_char, CStr};
use std::ptr;

use ndkorn_ffi::*;

fn new_domain(kind: &str, dim: usize, n: usize) -> *mut NdkDomain {
    let name = format!("{kind}\0");
    let mut d = ptr::null_mut();
    let s = unsafe { ndk_domain_new(name.as_ptr().cast(), dim, n, &mut d) };
    assert_eq!(s, NdkStatus::Ok, "{}", last_error());
    d
}

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe {
        ndk_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(ndk_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn domain_lifecycle_and_topology() {
    let d = new_domain("annulus", 2, 17);
    let (mut nv, mut comps, mut h1) = (0usize, 0usize, 0usize);
    unsafe {
        assert_eq!(ndk_domain_num_vertices(d, &mut nv), NdkStatus::Ok);
        assert_eq!(ndk_domain_boundary_components(d, &mut comps), NdkStatus::Ok);
        assert_eq!(ndk_harmonic_dimension(d, 1, 1e-10, &mut h1), NdkStatus::Ok);
        ndk_domain_free(d);
        ndk_domain_free(ptr::null_mut());
    }
    assert_eq!((nv, comps, h1), (289, 2, 1));
}

#[test]
fn poincare_constant_of_the_square() {
    let d = new_domain("box", 2, 17);
    let (mut c, mut gap) = (0.0, 0.0);
    let s = unsafe { ndk_poincare_constant(d, 0, NdkBcMode::FullDirichlet, 1e-10, &mut c, &mut gap) };
    assert_eq!(s, NdkStatus::Ok);
    // 5-point Laplacian: lambda = 2 * (4/h^2) sin^2(pi h / 2)
    let h = 1.0 / 16.0;
    let lambda = 8.0 / (h * h) * (std::f64::consts::PI * h / 2.0).sin().powi(2);
    assert!((c - lambda.powf(-0.5)).abs() <= 1e-8 * c);
    assert!(gap > 10.0);
    unsafe { ndk_domain_free(d) };
}

#[test]
fn sharp_constant_below_bound() {
    let d = new_domain("box", 2, 9);
    let (mut cs, mut ch) = (0.0, 0.0);
    assert_eq!(unsafe { ndk_sharp_constant(d, NdkBcMode::FullDirichlet, 1e-10, &mut cs, &mut ch) }, NdkStatus::Ok);
    assert!(cs >= 1.0 && cs <= ch);
    assert_eq!(ch, 2.0);
    unsafe { ndk_domain_free(d) };

    let a = new_domain("annulus", 2, 17);
    let s = unsafe { ndk_sharp_constant(a, NdkBcMode::FullDirichlet, 1e-10, &mut cs, &mut ch) };
    assert_eq!(s, NdkStatus::HarmonicFormsPresent);
    assert!(last_error().contains("harmonic"));
    unsafe { ndk_domain_free(a) };
}

#[test]
fn korn_checks() {
    let d = new_domain("box", 3, 7);
    let mut r = NdkKornResult::default();
    assert_eq!(unsafe { ndk_korn_check_random(d, 3, &mut r) }, NdkStatus::Ok);
    assert!(r.ratio <= 2f64.sqrt() + 1e-10);
    assert!(r.identity_residual <= 1e-13);

    let mut nv = 0;
    unsafe { ndk_domain_num_vertices(d, &mut nv) };
    // v = (b(x) b(y) b(z), 0, 0) with b(t) = t(1-t), then shifted by 2 for
    // the tangential variant
    let b = |i: usize| {
        let t = i as f64 / 6.0;
        t * (1.0 - t)
    };
    let mut values = vec![0.0; 3 * nv];
    for (v, slot) in values[..nv].iter_mut().enumerate() {
        *slot = b(v % 7) * b(v / 7 % 7) * b(v / 49);
    }
    let mut plain = NdkKornResult::default();
    assert_eq!(unsafe { ndk_korn_check(d, values.as_ptr(), values.len(), false, &mut plain) }, NdkStatus::Ok);
    let shifted: Vec<f64> = values.iter().map(|x| x + 2.0).collect();
    let mut lifted = NdkKornResult::default();
    assert_eq!(unsafe { ndk_korn_check(d, shifted.as_ptr(), shifted.len(), true, &mut lifted) }, NdkStatus::Ok);
    assert!((plain.ratio - lifted.ratio).abs() <= 1e-12);
    // shifted field is not Dirichlet
    assert_eq!(
        unsafe { ndk_korn_check(d, shifted.as_ptr(), shifted.len(), false, &mut lifted) },
        NdkStatus::InvalidArgument
    );
    unsafe { ndk_domain_free(d) };
}

#[test]
fn errors_are_reported() {
    let mut d = ptr::null_mut();
    unsafe {
        assert_eq!(ndk_domain_new(c"sphere".as_ptr(), 2, 9, &mut d), NdkStatus::InvalidArgument);
        assert!(last_error().contains("sphere"));
        assert_eq!(ndk_domain_new(c"shell".as_ptr(), 2, 9, &mut d), NdkStatus::InvalidDomain);
        assert_eq!(ndk_domain_new(ptr::null(), 2, 9, &mut d), NdkStatus::NullPointer);
        let mut n = 0;
        assert_eq!(ndk_domain_num_vertices(ptr::null(), &mut n), NdkStatus::NullPointer);
        let ok = new_domain("box", 2, 5);
        assert_eq!(ndk_domain_num_vertices(ok, ptr::null_mut()), NdkStatus::NullPointer);
        let (mut c, mut g) = (0.0, 0.0);
        assert_eq!(
            ndk_poincare_constant(ok, 0, NdkBcMode::Tangential, -1.0, &mut c, &mut g),
            NdkStatus::InvalidArgument
        );
        assert_eq!(
            ndk_poincare_constant(ok, 7, NdkBcMode::Tangential, 1e-10, &mut c, &mut g),
            NdkStatus::InvalidArgument
        );
        let mut r = NdkKornResult::default();
        let short = [0.0; 3];
        assert_eq!(ndk_korn_check(ok, short.as_ptr(), 3, false, &mut r), NdkStatus::InvalidArgument);
        assert_eq!(ndk_domain_num_vertices(ok, &mut n), NdkStatus::Ok);
        assert_eq!(last_error(), "");
        ndk_domain_free(ok);
    }
}

#[test]
fn truncated_error_message() {
    let mut d = ptr::null_mut();
    unsafe {
        ndk_domain_new(c"sphere".as_ptr(), 2, 9, &mut d);
        let full = ndk_last_error_message(ptr::null_mut(), 0);
        let mut buf = [1 as c_char; 4];
        assert_eq!(ndk_last_error_message(buf.as_mut_ptr(), 4), full);
        assert_eq!(buf[3], 0);
    }
}

#[test]
fn header_lists_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/ndkorn.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 10);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
}
