use std::ffi::{CStr, CString};
use std::ptr;

use qecsearch_ffi::*;

fn last_error() -> String {
    let p = qs_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn builtin_perfect_code() {
    let name = CString::new("5-2-3").unwrap();
    let mut code = ptr::null_mut();
    unsafe {
        assert_eq!(qs_code_builtin(name.as_ptr(), &mut code), QsStatus::Ok);
        let (mut n, mut k) = (0, 0);
        assert_eq!(qs_code_shape(code, &mut n, &mut k), QsStatus::Ok);
        assert_eq!((n, k), (5, 2));
        let mut d = 0;
        assert_eq!(qs_code_distance(code, &mut d), QsStatus::Ok);
        assert_eq!(d, 3);
        let mut a = [0.0; 6];
        let mut b = [0.0; 6];
        assert_eq!(qs_code_enumerators(code, a.as_mut_ptr(), b.as_mut_ptr(), 6), QsStatus::Ok);
        let want_a = [1.0, 0.0, 0.0, 0.0, 15.0, 0.0];
        let want_b = [1.0, 0.0, 0.0, 30.0, 15.0, 18.0];
        for j in 0..6 {
            assert!((a[j] - want_a[j]).abs() < 1e-6 && (b[j] - want_b[j]).abs() < 1e-6);
        }
        assert_eq!(qs_code_enumerators(code, a.as_mut_ptr(), b.as_mut_ptr(), 5), QsStatus::InvalidArgument);
        let mut c = 1.0;
        assert_eq!(qs_code_cost_l1(code, 3, &mut c), QsStatus::Ok);
        assert!(c < 1e-10);
        qs_code_free(code);
    }
}

#[test]
fn artifact_round_trip() {
    let rows: Vec<CString> = ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"].iter().map(|s| CString::new(*s).unwrap()).collect();
    let ptrs: Vec<*const std::ffi::c_char> = rows.iter().map(|r| r.as_ptr()).collect();
    let mut code = ptr::null_mut();
    unsafe {
        assert_eq!(qs_code_from_stabilizers(ptrs.as_ptr(), ptrs.len(), &mut code), QsStatus::Ok);
        let mut json = ptr::null_mut();
        assert_eq!(qs_code_to_artifact(code, 3, &mut json), QsStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(qs_code_from_artifact(json, &mut back), QsStatus::Ok);
        let mut d = 0;
        assert_eq!(qs_code_distance(back, &mut d), QsStatus::Ok);
        assert_eq!(d, 3);
        qs_string_free(json);
        qs_code_free(back);
        qs_code_free(code);
    }
}

#[test]
fn errors_map_to_codes() {
    let mut code = ptr::null_mut();
    unsafe {
        assert_eq!(qs_code_builtin(ptr::null(), &mut code), QsStatus::NullPointer);
        let bad = CString::new("no-such-code").unwrap();
        assert_eq!(qs_code_builtin(bad.as_ptr(), &mut code), QsStatus::Config);
        assert!(last_error().contains("no-such-code"));
        let omega = CString::new("7-2-3-omega").unwrap();
        assert_eq!(qs_code_builtin(omega.as_ptr(), &mut code), QsStatus::Invariant);
        let junk = CString::new("{not json").unwrap();
        assert_eq!(qs_code_from_artifact(junk.as_ptr(), &mut code), QsStatus::Parse);
        let mut d = 0;
        assert_eq!(qs_code_distance(ptr::null(), &mut d), QsStatus::NullPointer);
        let deltas = [3.0, 3.0];
        let mut v = 0.0;
        assert_eq!(qs_concat_bound(deltas.as_ptr(), 2, 1.0, &mut v), QsStatus::Ok);
        assert_eq!(v, 9.0);
        assert_eq!(qs_concat_bound(deltas.as_ptr(), 2, -1.0, &mut v), QsStatus::InvalidArgument);
        qs_code_free(ptr::null_mut());
        qs_string_free(ptr::null_mut());
    }
}

#[test]
fn search_preset_detection_code() {
    let name = CString::new("4-4-2").unwrap();
    let mut code = ptr::null_mut();
    let mut c = f64::NAN;
    unsafe {
        assert_eq!(qs_search_preset(name.as_ptr(), 0, &mut code, &mut c), QsStatus::Ok);
        assert!(c < 1e-6);
        let mut d = 0;
        assert_eq!(qs_code_distance(code, &mut d), QsStatus::Ok);
        assert!(d >= 2);
        qs_code_free(code);
    }
}

#[test]
fn header_declares_the_api() {
    let h = include_str!("../include/qecsearch.h");
    for f in [
        "qs_last_error",
        "qs_version",
        "qs_code_builtin",
        "qs_code_from_stabilizers",
        "qs_code_from_artifact",
        "qs_code_to_artifact",
        "qs_search_preset",
        "qs_code_distance",
        "qs_code_enumerators",
        "qs_code_free",
        "qs_string_free",
        "typedef struct QsCode QsCode",
        "QS_STATUS_EXHAUSTED",
    ] {
        assert!(h.contains(f), "header lacks {f}");
    }
    let v = unsafe { CStr::from_ptr(qs_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
