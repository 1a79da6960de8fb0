use std::ffi::{c_char, CStr};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use vortex_spectra_ffi::*;

fn last_error() -> String {
    let n = vs_last_error_length();
    let mut buf = vec![0 as c_char; n.max(1)];
    assert_eq!(unsafe { vs_last_error_message(buf.as_mut_ptr(), buf.len()) }, VsStatus::Ok);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn example1_real_eigenvalue_through_the_abi() {
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { vs_fiber_new_example(1, 0.7, -1, 0, 0.05, &mut f) }, VsStatus::Ok);
    let mut tag = VsFiberTag::General;
    assert_eq!(unsafe { vs_fiber_class(f, &mut tag) }, VsStatus::Ok);
    assert_eq!(tag, VsFiberTag::ReducedSymmetric);
    let (mut l, mut cert) = (0.0, -2);
    assert_eq!(unsafe { vs_find_real_eigenvalue(f, 0.0, 0.0, &mut l, &mut cert) }, VsStatus::Ok);
    assert!((l - 0.0885395862887858).abs() < 1e-12);
    assert_eq!(cert, 1);
    assert_eq!(vs_last_error_length(), 0);
    unsafe { vs_fiber_free(f) };
}

#[test]
fn example2_pair_and_count() {
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { vs_fiber_new_example(2, 1.0, 0, 1, 0.05, &mut f) }, VsStatus::Ok);
    let mut n = 0usize;
    assert_eq!(unsafe { vs_count_upper_half_disc(f, &mut n) }, VsStatus::Ok);
    assert_eq!(n, 1);
    let (mut re, mut im) = (0.0, 0.0);
    assert_eq!(unsafe { vs_find_complex_eigenvalue(f, -0.02, 0.11, &mut re, &mut im) }, VsStatus::Ok);
    assert!((re + 0.017943375724766574).abs() < 1e-9 && (im - 0.11072662440208193).abs() < 1e-9);
    unsafe { vs_fiber_free(f) };
}

#[test]
fn errors_set_status_and_message() {
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { vs_fiber_new_example(7, 0.7, 1, 0, 0.1, &mut f) }, VsStatus::InvalidParameter);
    assert!(f.is_null());
    assert!(last_error().contains("example"));
    assert_eq!(unsafe { vs_fiber_new_example(1, 0.7, 1, 0, 0.1, ptr::null_mut()) }, VsStatus::NullPointer);
    let mut x = 0.0;
    assert_eq!(unsafe { vs_find_nu_star(2, 0.7, &mut x) }, VsStatus::InvalidParameter);
    assert_eq!(unsafe { vs_find_nu_star(1, 0.2, &mut x) }, VsStatus::Precondition);
    let msg = last_error();
    assert!(!msg.is_empty());
    // message buffer too small
    let mut one = [0 as c_char; 1];
    assert_eq!(unsafe { vs_last_error_message(one.as_mut_ptr(), 1) }, VsStatus::BufferTooSmall);
    // success clears the message
    assert_eq!(unsafe { vs_find_nu_star(1, 0.5, &mut x) }, VsStatus::Ok);
    assert!(0.244029 < x && x < 0.244949);
    assert_eq!(vs_last_error_length(), 0);
    unsafe { vs_fiber_free(ptr::null_mut()) };
}

#[test]
fn fiber_coefficient_matches_closed_form() {
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { vs_fiber_new(0, 1, 0.5, 0.0, 0.7, -1, 0, 0.05, &mut f) }, VsStatus::Ok);
    let (mut re, mut im) = (0.0, 0.0);
    assert_eq!(unsafe { vs_fiber_coefficient(f, 0.1, 0.2, 3, &mut re, &mut im) }, VsStatus::Ok);
    let want = vortex_spectra::presets::Example::Example1.closed_form_coefficient(
        0.7,
        vortex_spectra::lattice::LatticeVector::new(-1, 0),
        num_complex::Complex64::new(0.1, 0.2),
        0.05,
        3,
    );
    assert!((re - want.re).abs() <= 1e-13 * want.norm() && (im - want.im).abs() <= 1e-13 * want.norm());
    unsafe { vs_fiber_free(f) };
}

#[test]
fn manifold_handle() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { vs_manifold_new(1, 0.7, 0.05, 4, 3, &mut m) }, VsStatus::Ok);
    let (mut dim, mut mu, mut mc, mut ms) = (0, 0, 0, 0);
    assert_eq!(unsafe { vs_manifold_dims(m, &mut dim, &mut mu, &mut mc, &mut ms) }, VsStatus::Ok);
    assert_eq!((mu, mc, mu + mc + ms), (1, 0, dim));
    let mut delta = 0.0;
    assert_eq!(unsafe { vs_manifold_delta(m, VsFlavor::CenterStable, &mut delta) }, VsStatus::Ok);
    assert!(delta > 0.0);
    // the origin maps to the origin
    let base = vec![0.0; dim];
    let mut out = vec![1.0; dim];
    let mut c = -1.0;
    assert_eq!(unsafe { vs_manifold_graph(m, VsFlavor::CenterStable, base.as_ptr(), dim, out.as_mut_ptr(), &mut c) }, VsStatus::Ok);
    assert!(out.iter().all(|v| *v == 0.0));
    assert_eq!(
        unsafe { vs_manifold_graph(m, VsFlavor::CenterStable, base.as_ptr(), dim + 1, out.as_mut_ptr(), &mut c) },
        VsStatus::InvalidParameter
    );
    unsafe { vs_manifold_free(m) };
}

#[test]
fn header_declares_every_entry_point() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/vortex_spectra.h")).unwrap();
    for f in [
        "vs_version", "vs_last_error_length", "vs_last_error_message", "vs_fiber_new_example", "vs_fiber_new",
        "vs_fiber_free", "vs_fiber_class", "vs_fiber_coefficient", "vs_find_real_eigenvalue", "vs_find_complex_eigenvalue",
        "vs_count_upper_half_disc", "vs_find_nu_star", "vs_manifold_new", "vs_manifold_free", "vs_manifold_dims",
        "vs_manifold_delta", "vs_manifold_graph",
    ] {
        assert!(h.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(h.contains("typedef struct VsFiber VsFiber;"));
    let v = unsafe { CStr::from_ptr(vs_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

/// Compiles and runs a C program against the header and the shared library.
#[test]
fn c_program_links_and_runs() {
    let Ok(exe) = std::env::current_exe() else { return };
    let lib_dir: PathBuf = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    if !lib_dir.join("libvortex_spectra_ffi.so").exists() {
        eprintln!("shared library not built; skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "vortex_spectra.h"
int main(void) {
    VsFiber *f = NULL;
    if (vs_fiber_new_example(1, 0.7, -1, 0, 0.1, &f) != VS_STATUS_OK) return 2;
    double l = 0.0; int cert = -2;
    if (vs_find_real_eigenvalue(f, 0.0, 0.0, &l, &cert) != VS_STATUS_OK) return 3;
    vs_fiber_free(f);
    if (vs_fiber_new_example(9, 0.7, -1, 0, 0.1, &f) != VS_STATUS_INVALID_PARAMETER) return 4;
    char msg[256];
    if (vs_last_error_message(msg, sizeof msg) != VS_STATUS_OK) return 5;
    printf("%.12f %d %s\n", l, cert, msg);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("smoke");
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let cc = Command::new("cc")
        .arg(&src)
        .arg(format!("-I{include}"))
        .arg(format!("-L{}", lib_dir.display()))
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .arg("-lvortex_spectra_ffi")
        .arg("-o")
        .arg(&bin)
        .output();
    let Ok(cc) = cc else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(cc.status.success(), "{}", String::from_utf8_lossy(&cc.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let out = String::from_utf8(run.stdout).unwrap();
    assert!(out.starts_with("0.049267887808 1 "), "{out}");
}
