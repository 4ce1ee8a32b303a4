use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use purchase_timing_ffi::*;

fn last_error() -> String {
    let p = pt_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn perpetual_handle_round_trip() {
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(pt_perpetual_new(0.05, 0.2, 5.0, 0.025, 0.05, &mut h), PtStatus::Ok);
        let mut th = PtPerpetualThresholds::default();
        assert_eq!(pt_perpetual_thresholds(h, &mut th), PtStatus::Ok);
        assert!((th.b_tilde_star - 2.5 / 1.2).abs() < 1e-12);
        assert!((th.b_star - 0.5 / 0.19).abs() < 1e-12);
        assert!((th.s_star - 3.6408).abs() < 1e-3);
        assert!((th.limit - 5.0 / 6.0).abs() < 1e-12);
        let mut v = 0.0;
        assert_eq!(pt_perpetual_timing_value(h, 1e6, &mut v), PtStatus::Ok);
        assert!((v - th.limit).abs() < 1e-6);
        assert_eq!(pt_perpetual_price(h, PtSide::Market, 1.0, &mut v), PtStatus::Ok);
        assert_eq!(v, 4.0);
        assert_eq!(
            pt_perpetual_price(h, PtSide::Buyer, -1.0, &mut v),
            PtStatus::InvalidArgument
        );
        pt_perpetual_free(h);
    }
}

#[test]
fn wrong_intensity_order_is_an_invalid_argument() {
    let mut h = ptr::null_mut();
    let status = unsafe { pt_perpetual_new(0.05, 0.2, 5.0, 0.05, 0.025, &mut h) };
    assert_eq!(status, PtStatus::InvalidArgument);
    assert!(h.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn closed_form_satisfies_parity() {
    let (r, sigma, lam, t_mat, k, s) = (0.05, 0.2, 0.2, 1.0, 5.0, 4.2);
    let (mut c, mut p) = (0.0, 0.0);
    unsafe {
        assert_eq!(
            pt_closed_form_price(r, sigma, lam, t_mat, PtPayoff::Call, k, 0.0, s, &mut c),
            PtStatus::Ok
        );
        assert_eq!(
            pt_closed_form_price(r, sigma, lam, t_mat, PtPayoff::Put, k, 0.0, s, &mut p),
            PtStatus::Ok
        );
        assert_eq!(
            pt_closed_form_price(r, -1.0, lam, t_mat, PtPayoff::Put, k, 0.0, s, &mut p),
            PtStatus::InvalidArgument
        );
    }
    // The stock price is a martingale after discounting, defaults included.
    assert!((c - p - (s - k * (-r * t_mat).exp())).abs() < 1e-10);
}

#[test]
fn run_config_writes_outputs_and_reports_errors() {
    let dir = tempfile::tempdir().unwrap();
    let doc = CString::new(
        r#"{"scenario": "perpetual", "model": {"r": 0.05, "sigma": 0.2, "strike": 5,
            "lambda_market": 0.025, "lambda_buyer": 0.05}}"#,
    )
    .unwrap();
    let out_dir = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut run = ptr::null_mut();
    unsafe {
        assert_eq!(pt_run_config(doc.as_ptr(), out_dir.as_ptr(), &mut run), PtStatus::Ok);
        let summary = CStr::from_ptr(pt_run_summary(run)).to_str().unwrap();
        let v: serde_json::Value = serde_json::from_str(summary).unwrap();
        assert_eq!(v["status"], "ok");
        assert!((v["results"]["s_star"].as_f64().unwrap() - 3.6408).abs() < 1e-3);
        pt_run_free(run);
    }
    assert!(dir.path().join("summary.json").exists());

    let bad = CString::new(r#"{"scenario": "barrier", "model": {}}"#).unwrap();
    let mut run = ptr::null_mut();
    let status = unsafe { pt_run_config(bad.as_ptr(), out_dir.as_ptr(), &mut run) };
    assert_eq!(status, PtStatus::UnknownScenario);
    assert!(last_error().contains("barrier"));
    let malformed = CString::new("{").unwrap();
    let status = unsafe { pt_run_config(malformed.as_ptr(), out_dir.as_ptr(), &mut run) };
    assert_eq!(status, PtStatus::Config);
    assert_eq!(
        unsafe { pt_run_config(ptr::null(), ptr::null(), &mut run) },
        PtStatus::NullPointer
    );
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(pt_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// Compile a C program against the generated header and link it to the
/// static library when one is available.
#[test]
fn header_compiles_and_links() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = root.join("include");
    assert!(header_dir.join("purchase_timing.h").exists());
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let work = tempfile::tempdir().unwrap();
    let src = work.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "purchase_timing.h"
int main(void) {
    PtPerpetual *h = NULL;
    if (pt_perpetual_new(0.05, 0.2, 5.0, 0.025, 0.05, &h) != PT_STATUS_OK) return 1;
    PtPerpetualThresholds th;
    if (pt_perpetual_thresholds(h, &th) != PT_STATUS_OK) return 2;
    pt_perpetual_free(h);
    printf("%.4f\n", th.s_star);
    return th.s_star > 3.64 && th.s_star < 3.642 ? 0 : 3;
}
"#,
    )
    .unwrap();
    let profile_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = profile_dir.join("libpurchase_timing_ffi.a");
    let exe = work.path().join("main");
    let mut cmd = Command::new(&cc);
    cmd.arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&header_dir)
        .arg(&src);
    if lib.exists() {
        cmd.arg(&lib).args(["-lpthread", "-ldl", "-lm", "-o"]).arg(&exe);
    } else {
        cmd.arg("-fsyntax-only");
    }
    let status = cmd.status().unwrap();
    assert!(status.success(), "C compile failed");
    if lib.exists() {
        let out = Command::new(&exe).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
        assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "3.6408");
    }
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc)
            .arg("--version")
            .output()
            .is_ok_and(|o| o.status.success())
        {
            return Ok(cc.to_string());
        }
    }
    Err(())
}
