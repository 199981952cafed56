use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use degrelax_ffi::*;

const QUARTIC: &str = r#"{"domain":[-2,2],"pieces":[{"range":[-2,2],"kind":"poly","params":{"coeffs":[1,0,-2,0,1]}}]}"#;
const IDENTITY: &str = r#"{"domain":[-2,2],"pieces":[{"range":[-2,2],"kind":"poly","params":{"coeffs":[0,1]}}]}"#;
const CUBE: &str = r#"{"domain":[-2,2],"pieces":[{"range":[-2,2],"kind":"poly","params":{"coeffs":[0,0,0,1]}}]}"#;
const AFFINE: &str = r#"{"domain":[0,1],"pieces":[{"range":[0,1],"kind":"poly","params":{"coeffs":[2,-1]}}]}"#;

fn weight(json: &str) -> *mut DwWeight {
    let s = CString::new(json).unwrap();
    let mut w = ptr::null_mut();
    assert_eq!(unsafe { dw_weight_from_json(s.as_ptr(), &mut w) }, DwStatus::Ok);
    w
}

fn function(json: &str) -> *mut DwFunction {
    let s = CString::new(json).unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { dw_function_from_json(s.as_ptr(), &mut f) }, DwStatus::Ok);
    f
}

fn last_error() -> String {
    let p = dw_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn analysis_round_trip() {
    let w = weight(QUARTIC);
    let mut a = ptr::null_mut();
    unsafe {
        assert_eq!(dw_analysis_new(w, 1e-9, &mut a), DwStatus::Ok);
        let (mut n, mut truncated) = (0usize, true);
        assert_eq!(dw_analysis_interval_count(a, &mut n, &mut truncated), DwStatus::Ok);
        assert_eq!((n, truncated), (3, false));
        let (mut lo, mut hi) = (0.0, 0.0);
        assert_eq!(dw_analysis_interval(a, 2, &mut lo, &mut hi), DwStatus::Ok);
        assert!((lo - 1.0).abs() < 1e-9 && hi == 2.0);
        let mut v = 0.0;
        assert_eq!(dw_analysis_hat_value(a, 0.0, &mut v), DwStatus::Ok);
        // middle value on (-1, 1) is w(½) = 9/16
        assert!((v - 0.5625).abs() < 1e-12);

        let u = function(IDENTITY);
        let (mut finite, mut f) = (false, 0.0);
        assert_eq!(dw_relaxed_functional(a, u, 64, &mut finite, &mut f), DwStatus::Ok);
        assert!(finite && (f - 92.0 / 15.0).abs() < 1e-9);
        let mut m = 0.0;
        assert_eq!(dw_poincare_margin(a, u, 64, &mut m), DwStatus::Ok);
        assert!(m > 0.0);
        let mut tv = 0.0;
        assert_eq!(dw_pairing_total_variation(w, u, -1.0, 1.0, 64, &mut tv), DwStatus::Ok);
        assert!((tv - 16.0 / 15.0).abs() < 1e-9);
        dw_function_free(u);
        dw_analysis_free(a);
        dw_weight_free(w);
    }
}

#[test]
fn errors_carry_status_and_message() {
    unsafe {
        let bad = CString::new("{").unwrap();
        let mut w = ptr::null_mut();
        assert_eq!(dw_weight_from_json(bad.as_ptr(), &mut w), DwStatus::Parse);
        assert!(w.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(dw_weight_from_json(ptr::null(), &mut w), DwStatus::NullPointer);
        assert!(last_error().contains("null"));
        let mut a = ptr::null_mut();
        assert_eq!(dw_analysis_new(ptr::null(), 1e-9, &mut a), DwStatus::NullPointer);

        let q = weight(QUARTIC);
        assert_eq!(dw_analysis_new(q, 1e-9, &mut a), DwStatus::Ok);
        let mut v = 0.0;
        assert_eq!(dw_analysis_hat_value(a, 3.0, &mut v), DwStatus::OutOfDomain);
        let (mut lo, mut hi) = (0.0, 0.0);
        assert_eq!(dw_analysis_interval(a, 9, &mut lo, &mut hi), DwStatus::InvalidArgument);
        let mut c = 0.0;
        assert_eq!(dw_a1_constant(q, &mut c), DwStatus::HypothesisViolated);
        let cube = function(CUBE);
        let mut finite = true;
        assert_eq!(dw_relaxed_functional(a, cube, 64, &mut finite, &mut v), DwStatus::Ok);
        dw_function_free(cube);
        dw_analysis_free(a);
        dw_weight_free(q);
        dw_weight_free(ptr::null_mut());
    }
}

#[test]
fn a1_on_affine_weight() {
    let w = weight(AFFINE);
    let mut c = 0.0;
    unsafe {
        assert_eq!(dw_a1_constant(w, &mut c), DwStatus::Ok);
        dw_weight_free(w);
    }
    assert!((1.0 - 1e-8..=1.0).contains(&c));
    assert!(dw_last_error_message().is_null());
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(dw_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/degrelax.h")).unwrap();
    for name in [
        "dw_weight_from_json",
        "dw_function_from_json",
        "dw_analysis_new",
        "dw_analysis_interval_count",
        "dw_analysis_interval",
        "dw_analysis_hat_value",
        "dw_relaxed_functional",
        "dw_poincare_margin",
        "dw_pairing_total_variation",
        "dw_a1_constant",
        "dw_last_error_message",
        "typedef struct DwAnalysis DwAnalysis",
        "DW_STATUS_NOT_IN_DOMAIN = 5",
    ] {
        assert!(header.contains(name), "{name}");
    }
}

#[test]
fn c_program_links_and_runs() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libdegrelax_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::TempDir::new().unwrap();
    let exe = dir.path().join("roundtrip");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/roundtrip.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), env!("CARGO_PKG_VERSION"));
}
