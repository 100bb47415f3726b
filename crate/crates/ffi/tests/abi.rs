use std::ffi::{CStr, CString};
use std::ptr;

use acx_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = acx_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn builtin_mapping_check_round_trip() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(acx_mapping_builtin(c("acl-to-rbac").as_ptr(), &mut m), AcxStatus::Ok);
        let mut report = ptr::null_mut();
        let mut all_hold = true;
        let st = acx_check(m, c("SCs,SCa").as_ptr(), ptr::null(), &mut report, &mut all_hold);
        assert_eq!(st, AcxStatus::Ok);
        assert!(!all_hold);
        let json = CStr::from_ptr(report).to_str().unwrap().to_string();
        let parsed = acx_core::report::Report::from_json(&json).unwrap();
        assert_eq!(parsed.summary.failures, vec![acx_core::PropertyTag::SCs]);
        acx_string_free(report);

        let st = acx_check(m, c("SCa,QPa").as_ptr(), c("2,1,4").as_ptr(), &mut report, &mut all_hold);
        assert_eq!(st, AcxStatus::Ok);
        assert!(all_hold);
        acx_string_free(report);
        acx_mapping_free(m);
    }
}

#[test]
fn systems_and_mappings_from_json() {
    let acl = include_str!("../../core/corpus/acl.json");
    let mapping = include_str!("../../core/corpus/identity-acl.json");
    unsafe {
        let mut sys = ptr::null_mut();
        assert_eq!(acx_system_from_json(c(acl).as_ptr(), c("acl").as_ptr(), &mut sys), AcxStatus::Ok);
        let (mut states, mut truncated) = (0usize, true);
        assert_eq!(acx_system_explore(sys, 2, 1, 6, &mut states, &mut truncated), AcxStatus::Ok);
        assert_eq!(states, 16);
        assert_eq!(acx_system_explore(sys, 0, 1, 6, &mut states, ptr::null_mut()), AcxStatus::InvalidInput);

        let mut m = ptr::null_mut();
        assert_eq!(acx_mapping_from_json(c(mapping).as_ptr(), sys, sys, &mut m), AcxStatus::Ok);
        let mut report = ptr::null_mut();
        let mut all_hold = false;
        assert_eq!(acx_check(m, c("SCs,QPf,Rbi").as_ptr(), ptr::null(), &mut report, &mut all_hold), AcxStatus::Ok);
        assert!(all_hold);
        acx_string_free(report);
        acx_mapping_free(m);
        acx_system_free(sys);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut sys = ptr::null_mut();
        assert_eq!(acx_system_from_json(c("{nope").as_ptr(), ptr::null(), &mut sys), AcxStatus::InvalidInput);
        assert!(sys.is_null());
        assert!(last_error().contains("line 1"), "{}", last_error());
        assert_eq!(acx_system_builtin(c("missing").as_ptr(), &mut sys), AcxStatus::NotFound);
        assert!(last_error().contains("missing"));
        assert_eq!(acx_system_builtin(ptr::null(), &mut sys), AcxStatus::NullArgument);
        assert_eq!(acx_system_builtin(c("acl").as_ptr(), ptr::null_mut()), AcxStatus::NullArgument);
        let bad = [0xffu8, 0];
        assert_eq!(acx_system_builtin(bad.as_ptr().cast(), &mut sys), AcxStatus::InvalidUtf8);

        let mut m = ptr::null_mut();
        assert_eq!(acx_mapping_load(c("/nonexistent/dir/zzz.json").as_ptr(), &mut m), AcxStatus::Io);
        assert_eq!(acx_mapping_builtin(c("acl-to-rbac").as_ptr(), &mut m), AcxStatus::Ok);
        let mut report = ptr::null_mut();
        assert_eq!(acx_check(m, c("Bogus").as_ptr(), ptr::null(), &mut report, ptr::null_mut()), AcxStatus::NotFound);
        assert_eq!(acx_check(m, c("SCa").as_ptr(), c("x").as_ptr(), &mut report, ptr::null_mut()), AcxStatus::InvalidInput);
        assert!(report.is_null());
        acx_mapping_free(m);

        // A successful call clears the previous message.
        assert_eq!(acx_system_builtin(c("acl").as_ptr(), &mut sys), AcxStatus::Ok);
        assert!(acx_last_error().is_null());
        acx_system_free(sys);
        acx_system_free(ptr::null_mut());
        acx_string_free(ptr::null_mut());
    }
}

#[test]
fn lattice_queries() {
    unsafe {
        let mut cmp = AcxComparison::Equal;
        assert_eq!(acx_lattice_compare(c("TL-SMR").as_ptr(), c("HMG+").as_ptr(), &mut cmp), AcxStatus::Ok);
        assert_eq!(cmp, AcxComparison::StrictlyStronger);
        assert_eq!(acx_lattice_compare(c("TL-SMR").as_ptr(), c("Ganta").as_ptr(), &mut cmp), AcxStatus::Ok);
        assert_eq!(cmp, AcxComparison::Incomparable);
        assert_eq!(acx_lattice_compare(c("SCa").as_ptr(), c("SCs").as_ptr(), &mut cmp), AcxStatus::Ok);
        assert_eq!(cmp, AcxComparison::StrictlyWeaker);

        let mut out = ptr::null_mut();
        assert_eq!(acx_lattice_decompose(c("ALS").as_ptr(), &mut out), AcxStatus::Ok);
        assert_eq!(CStr::from_ptr(out).to_str().unwrap(), "SCs QPa R↔");
        acx_string_free(out);
        assert_eq!(acx_lattice_decompose(c("Nope").as_ptr(), &mut out), AcxStatus::NotFound);
    }
    let v = unsafe { CStr::from_ptr(acx_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/acx.h")).unwrap();
    for f in [
        "acx_last_error", "acx_version", "acx_string_free", "acx_system_from_json", "acx_system_builtin",
        "acx_system_free", "acx_system_explore", "acx_mapping_from_json", "acx_mapping_builtin",
        "acx_mapping_load", "acx_mapping_free", "acx_check", "acx_lattice_compare", "acx_lattice_decompose",
    ] {
        assert!(header.contains(&format!(" {f}(")) || header.contains(&format!("*{f}(")), "{f}");
    }
    assert!(header.contains("typedef struct AcxSystem AcxSystem;"));
}

/// The generated header must compile as C on its own.
#[test]
fn header_compiles_as_c() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let dir = tempfile_dir();
    let src = dir.join("use_header.c");
    std::fs::write(&src, "#include \"acx.h\"\nint main(void) { AcxSystem *s = 0; return acx_system_builtin(\"acl\", &s) == ACX_STATUS_OK ? 0 : 1; }\n").unwrap();
    let out = match std::process::Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", concat!(env!("CARGO_MANIFEST_DIR"), "/include")])
        .arg(&src)
        .output()
    {
        Ok(o) => o,
        Err(e) => {
            eprintln!("skipping: no C compiler ({e})");
            return;
        }
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn tempfile_dir() -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("acx-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}
