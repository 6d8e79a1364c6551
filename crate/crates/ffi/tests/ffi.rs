use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use hazardlab_ffi::*;

const RS_INTENSITY: &str = r#"{
  "model": {
    "kind": "regime_switching",
    "generator": [[-1.0, 1.0], [0.5, -0.5]],
    "regimes": [{"mu": 0.5, "sigma": 1.0}, {"mu": 0.1, "sigma": 0.3}],
    "barrier": 0.36787944117144233,
    "x0": 1.0
  },
  "schedule": {"step": 1.0, "horizon": 2.0},
  "intensity": {"window": {"start": 0.0, "end": 1.0}, "knots": 20}
}"#;

const CHAIN_VERIFY: &str = r#"{
  "model": {
    "kind": "chain_only",
    "generator": [[-0.2, 0.2], [0.5, -0.5]],
    "initial_regime": 1,
    "default_rule": {"rule": "regime_set", "regimes": [0]}
  },
  "schedule": {"step": 0.5, "horizon": 2.0},
  "verify": {"n_paths": 5000, "seed": 4}
}"#;

fn last_error() -> String {
    let p = hl_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn model(json: &str) -> *mut HlModel {
    unsafe {
        let c = CString::new(json).unwrap();
        let mut m = ptr::null_mut();
        assert_eq!(hl_model_from_json(c.as_ptr(), &mut m), HlStatus::Ok, "{}", last_error_or_empty());
        assert!(!m.is_null());
        m
    }
}

fn last_error_or_empty() -> String {
    let p = hl_last_error();
    if p.is_null() {
        String::new()
    } else {
        unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
    }
}

#[test]
fn scalar_kernels() {
    unsafe {
        let mut v = 0.0;
        assert_eq!(hl_psi(0.0, 1.0, -1.0, &mut v), HlStatus::Ok);
        assert!((v - 0.682_689_492_137_085_9).abs() < 1e-14);
        assert!(hl_last_error().is_null());
        assert_eq!(hl_psi_quadrature(0.0, 1.0, -1.0, &mut v), HlStatus::Ok);
        assert!((v - 0.682_689_492_137_085_9).abs() < 1e-9);
        assert_eq!(hl_psi_t(0.0, 1.0, -1.0, &mut v), HlStatus::Ok);
        assert!((v + 0.241_970_724_519_143_35).abs() < 1e-15);
        assert_eq!(hl_phi_joint(0.0, 1.0, -1.0, 0.0, &mut v), HlStatus::Ok);
        assert!((v - 0.205_439_624_085_265_1).abs() < 1e-15);
        assert_eq!(hl_norm_cdf(0.0, &mut v), HlStatus::Ok);
        assert_eq!(v, 0.5);
        assert_eq!(hl_gbm_survival(std::f64::consts::E, 1.0, 0.5, 1.0, 1.0, &mut v), HlStatus::Ok);
        assert!((v - 0.682_689_492_137_085_9).abs() < 1e-14);
    }
}

#[test]
fn domain_errors_and_null_outputs() {
    unsafe {
        let mut v = 7.0;
        assert_eq!(hl_psi(0.0, -1.0, -1.0, &mut v), HlStatus::Domain);
        assert_eq!(v, 7.0);
        assert!(!last_error().is_empty());
        assert_eq!(hl_phi_joint(0.3, 1.5, -0.7, -0.8, &mut v), HlStatus::Domain);
        assert_eq!(hl_psi(0.0, 1.0, -1.0, ptr::null_mut()), HlStatus::InvalidArgument);
        assert!(last_error().contains("null"));
        assert_eq!(hl_norm_cdf(1.0, &mut v), HlStatus::Ok);
        assert!(hl_last_error().is_null());
    }
}

#[test]
fn model_lifecycle_and_intensity() {
    unsafe {
        let m = model(RS_INTENSITY);
        let mut len = 0usize;
        let st = hl_model_intensity(m, ptr::null_mut(), ptr::null_mut(), 0, &mut len);
        assert_eq!(st, HlStatus::BufferTooSmall);
        assert_eq!(len, 21);
        let mut t = vec![0.0; len];
        let mut l = vec![0.0; len];
        assert_eq!(hl_model_intensity(m, t.as_mut_ptr(), l.as_mut_ptr(), len, &mut len), HlStatus::Ok);
        assert_eq!(t[len - 1], 1.0);
        assert!((l[len - 1] - 0.354_437_45).abs() < 1e-6);
        assert!(l.iter().all(|x| x.is_finite() && *x >= 0.0));
        // no verify section
        let mut report = ptr::null_mut();
        let mut passed = false;
        assert_eq!(hl_model_verify_json(m, 1, &mut report, &mut passed), HlStatus::Config);
        assert!(report.is_null());
        hl_model_free(m);
        hl_model_free(ptr::null_mut());
    }
}

#[test]
fn bad_configurations() {
    unsafe {
        let mut m = ptr::null_mut();
        let bad = CString::new(RS_INTENSITY.replace("[-1.0, 1.0]", "[-1.0, 0.5]")).unwrap();
        assert_eq!(hl_model_from_json(bad.as_ptr(), &mut m), HlStatus::Config);
        assert!(m.is_null());
        assert!(last_error().contains("line"));
        let truncated = CString::new("{\"model\": ").unwrap();
        assert_eq!(hl_model_from_json(truncated.as_ptr(), &mut m), HlStatus::Config);
        assert_eq!(hl_model_from_json(ptr::null(), &mut m), HlStatus::InvalidArgument);
        let mut len = 0;
        assert_eq!(
            hl_model_intensity(ptr::null(), ptr::null_mut(), ptr::null_mut(), 0, &mut len),
            HlStatus::InvalidArgument
        );
    }
}

#[test]
fn verification_report() {
    unsafe {
        let m = model(CHAIN_VERIFY);
        let mut report = ptr::null_mut();
        let mut passed = false;
        assert_eq!(hl_model_verify_json(m, -1, &mut report, &mut passed), HlStatus::Ok);
        let text = CStr::from_ptr(report).to_str().unwrap().to_owned();
        hl_string_free(report);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["residual"]["format_version"], 1);
        assert_eq!(v["residual"]["rows"].as_array().unwrap().len(), 3);
        assert_eq!(passed, v["residual"]["pass"].as_bool().unwrap());

        // same seed, same bytes
        let mut again = ptr::null_mut();
        assert_eq!(hl_model_verify_json(m, 4, &mut again, &mut passed), HlStatus::Ok);
        assert_eq!(CStr::from_ptr(again).to_str().unwrap(), text);
        hl_string_free(again);
        hl_string_free(ptr::null_mut());
        hl_model_free(m);
    }
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/hazardlab.h")
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in [
        "hl_last_error",
        "hl_norm_cdf",
        "hl_psi",
        "hl_psi_quadrature",
        "hl_psi_t",
        "hl_phi_joint",
        "hl_gbm_survival",
        "hl_model_from_json",
        "hl_model_free",
        "hl_model_intensity",
        "hl_model_verify_json",
        "hl_string_free",
    ] {
        assert!(h.contains(&format!("{name}(")), "{name}");
    }
    assert!(h.contains("typedef struct HlModel HlModel;"));
    assert!(h.contains("HL_STATUS_BUFFER_TOO_SMALL = 5"));
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "hazardlab.h"

int main(void) {
    double v = 0.0;
    if (hl_psi(0.0, 1.0, -1.0, &v) != HL_STATUS_OK) return 10;
    if (v < 0.6826894 || v > 0.6826895) return 11;
    if (hl_psi(0.0, -1.0, -1.0, &v) != HL_STATUS_DOMAIN) return 12;
    if (hl_last_error() == NULL || strlen(hl_last_error()) == 0) return 13;
    HlModel *m = NULL;
    if (hl_model_from_json("{\"model\": 1}", &m) != HL_STATUS_CONFIG || m != NULL) return 14;
    printf("ok\n");
    return 0;
}
"#;

#[test]
fn c_program_links_against_the_static_library() {
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let lib = deps.parent().unwrap().join("libhazardlab_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let exe = dir.path().join("main");
    let cc = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .expect("a C compiler on PATH");
    assert!(cc.status.success(), "{}", String::from_utf8_lossy(&cc.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert_eq!(run.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&run.stdout), "ok\n");
}
