use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;

use memtele_ffi::*;

fn last_error() -> String {
    let p = mt_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn params_round_trip_and_validation() {
    let p = mt_params_new_default();
    let zeta = CString::new("zeta").unwrap();
    let mut v = 0.0;
    unsafe {
        assert_eq!(mt_params_get(p, zeta.as_ptr(), &mut v), MtStatus::Ok);
        assert_eq!(v, 0.9);
        assert_eq!(mt_params_set(p, zeta.as_ptr(), 0.5), MtStatus::Ok);
        mt_params_get(p, zeta.as_ptr(), &mut v);
        assert_eq!(v, 0.5);

        assert_eq!(mt_params_set(p, zeta.as_ptr(), 1.5), MtStatus::InvalidArgument);
        assert!(last_error().contains("zeta"));
        mt_params_get(p, zeta.as_ptr(), &mut v);
        assert_eq!(v, 0.5, "rejected value must not stick");

        let bogus = CString::new("bogus").unwrap();
        assert_eq!(mt_params_set(p, bogus.as_ptr(), 1.0), MtStatus::UnknownKey);
        assert_eq!(mt_params_get(p, bogus.as_ptr(), &mut v), MtStatus::UnknownKey);
        assert_eq!(mt_params_set(p, std::ptr::null(), 1.0), MtStatus::NullPointer);
        assert_eq!(mt_params_set(std::ptr::null_mut(), zeta.as_ptr(), 1.0), MtStatus::NullPointer);
        mt_params_free(p);
        mt_params_free(std::ptr::null_mut());
    }
}

#[test]
fn budget_matches_core() {
    let p = mt_params_new_default();
    let mut h = MtBudget::default();
    let mut r = MtBudget::default();
    unsafe {
        assert_eq!(mt_budget(p, MtInput::H, 0.0, &mut h), MtStatus::Ok);
        assert_eq!(mt_budget(p, MtInput::R, 0.0, &mut r), MtStatus::Ok);
        assert_eq!(mt_budget(p, MtInput::R, -1.0, &mut r), MtStatus::InvalidArgument);
        assert_eq!(mt_budget(p, MtInput::R, 0.0, std::ptr::null_mut()), MtStatus::NullPointer);
        mt_params_free(p);
    }
    assert_eq!(h.n_wcp, 0.0);
    assert!((h.fidelity_pred - 0.90).abs() < 0.01);
    assert!((r.fidelity_pred - 0.79).abs() < 0.02);
    assert!(h.herald_confidence > r.herald_confidence);
}

#[test]
fn simulation_is_deterministic_across_workers() {
    let p = mt_params_new_default();
    let (mut a, mut b) = (MtFidelity::default(), MtFidelity::default());
    unsafe {
        assert_eq!(mt_simulate_fidelity(p, MtInput::Plus, 0.5, 11, 2000, 1, &mut a), MtStatus::Ok);
        assert_eq!(mt_simulate_fidelity(p, MtInput::Plus, 0.5, 11, 2000, 3, &mut b), MtStatus::Ok);
        assert_eq!(mt_simulate_fidelity(p, MtInput::Plus, 0.5, 11, 0, 1, &mut b), MtStatus::InvalidArgument);
        mt_params_free(p);
    }
    assert_eq!(a, b);
    assert!(a.n_effective >= 2000.0);
    assert!((a.fidelity - 0.79).abs() < 0.05);
}

#[test]
fn bell_identity() {
    let mut r = MtBellReport::default();
    unsafe {
        assert_eq!(mt_verify_bell_identity(100, 1, &mut r), MtStatus::Ok);
        assert_eq!(mt_verify_bell_identity(100, 1, std::ptr::null_mut()), MtStatus::NullPointer);
    }
    assert!(r.passed);
    assert_eq!(r.n_random, 100);
    assert!(r.max_fidelity_error < 1e-10);
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/memtele.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "mt_params_new_default",
        "mt_params_free",
        "mt_params_set",
        "mt_params_get",
        "mt_budget",
        "mt_simulate_fidelity",
        "mt_verify_bell_identity",
        "mt_last_error_message",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .status()
    else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(status.success());
}
