use std::ffi::{CStr, CString};
use std::ptr;

use semitrotter_ffi::*;

fn last_error() -> String {
    let p = st_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn expressions() {
    let src = CString::new("cos(x) + x^2").unwrap();
    let mut e = ptr::null_mut();
    unsafe {
        assert_eq!(st_expr_parse(src.as_ptr(), &mut e), StStatus::Ok);
        let mut v = 0.0;
        assert_eq!(st_expr_eval(e, 2.0, &mut v), StStatus::Ok);
        assert!((v - (2f64.cos() + 4.0)).abs() < 1e-15);
        st_expr_free(e);

        let bad = CString::new("cos(").unwrap();
        let mut e = ptr::null_mut();
        assert_eq!(st_expr_parse(bad.as_ptr(), &mut e), StStatus::Parse);
        assert!(e.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(st_expr_parse(ptr::null(), &mut e), StStatus::NullPointer);
    }
}

#[test]
fn matrices_round_trip() {
    let data = [1.0, 0.0, 2.0, 1.0, 2.0, -1.0, 3.0, 0.0];
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(st_matrix_new(2, 2, data.as_ptr(), &mut m), StStatus::Ok);
        assert_eq!((st_matrix_rows(m), st_matrix_cols(m)), (2, 2));
        let mut back = [0.0; 8];
        assert_eq!(
            st_matrix_copy(m, back.as_mut_ptr(), back.len()),
            StStatus::Ok
        );
        assert_eq!(back, data);
        assert_eq!(
            st_matrix_copy(m, back.as_mut_ptr(), 3),
            StStatus::InvalidArgument
        );
        let mut norm = 0.0;
        assert_eq!(st_matrix_spectral_norm(m, &mut norm), StStatus::Ok);
        assert!(norm > 3.0);
        let mut c = ptr::null_mut();
        assert_eq!(st_matrix_commutator(m, m, &mut c), StStatus::Ok);
        assert_eq!(st_matrix_spectral_norm(c, &mut norm), StStatus::Ok);
        assert_eq!(norm, 0.0);
        st_matrix_free(c);
        st_matrix_free(m);
        st_matrix_free(ptr::null_mut());
        assert_eq!(st_matrix_rows(ptr::null()), 0);
    }
}

#[test]
fn split_step_is_close_to_exact() {
    let v = CString::new("cos(x)").unwrap();
    let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(
            st_model_build(
                0.125,
                16,
                StScheme::FiniteDifference,
                v.as_ptr(),
                &mut a,
                &mut b
            ),
            StStatus::Ok
        );
        let mut plan = ptr::null_mut();
        assert_eq!(st_plan_suzuki(4, &mut plan), StStatus::Ok);
        assert_eq!(st_plan_len(plan), 11);
        let mut u = ptr::null_mut();
        assert_eq!(st_trotter_step(plan, a, b, 0.01, &mut u), StStatus::Ok);

        let n = st_matrix_rows(a);
        let (mut ad, mut bd) = (vec![0.0; 2 * n * n], vec![0.0; 2 * n * n]);
        st_matrix_copy(a, ad.as_mut_ptr(), ad.len());
        st_matrix_copy(b, bd.as_mut_ptr(), bd.len());
        let hd: Vec<f64> = ad.iter().zip(&bd).map(|(x, y)| x + y).collect();
        let mut h = ptr::null_mut();
        assert_eq!(st_matrix_new(n, n, hd.as_ptr(), &mut h), StStatus::Ok);
        let mut e = ptr::null_mut();
        assert_eq!(st_exact_unitary(h, 0.01, &mut e), StStatus::Ok);
        let (mut ud, mut ed) = (vec![0.0; 2 * n * n], vec![0.0; 2 * n * n]);
        st_matrix_copy(u, ud.as_mut_ptr(), ud.len());
        st_matrix_copy(e, ed.as_mut_ptr(), ed.len());
        let gap = ud
            .iter()
            .zip(&ed)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(gap < 1e-8, "{gap}");

        let mut bad = ptr::null_mut();
        assert_eq!(st_plan_suzuki(3, &mut bad), StStatus::InvalidArgument);
        assert!(bad.is_null());
        let mut dense = ptr::null_mut();
        assert_eq!(st_trotter_step(plan, a, h, 0.1, &mut dense), StStatus::Ok);
        st_matrix_free(dense);
        let mut small = ptr::null_mut();
        let two = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        assert_eq!(st_matrix_new(2, 2, two.as_ptr(), &mut small), StStatus::Ok);
        let mut mismatch = ptr::null_mut();
        assert_eq!(
            st_trotter_step(plan, a, small, 0.1, &mut mismatch),
            StStatus::DimensionMismatch
        );
        st_matrix_free(small);
        for m in [a, b, u, h, e] {
            st_matrix_free(m);
        }
        st_plan_free(plan);
    }
}

#[test]
fn model_rejects_bad_input() {
    let v = CString::new("cos(x)").unwrap();
    let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(
            st_model_build(0.1, 7, StScheme::Spectral, v.as_ptr(), &mut a, &mut b),
            StStatus::InvalidArgument
        );
        assert_eq!(
            st_model_build(2.0, 8, StScheme::Spectral, v.as_ptr(), &mut a, &mut b),
            StStatus::InvalidArgument
        );
        assert!(a.is_null() && b.is_null());
    }
}

#[test]
fn experiments_through_the_abi() {
    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let kind = CString::new("beta").unwrap();
    let cfg = CString::new("h = 1/16, 1/32\n").unwrap();
    unsafe {
        assert_eq!(
            st_run_experiment(kind.as_ptr(), cfg.as_ptr(), out.as_ptr()),
            StStatus::Ok
        );
        assert!(dir.path().join("beta.csv").exists());
        let bad = CString::new("dt = 0.3\n").unwrap();
        let dt = CString::new("dt-sweep").unwrap();
        assert_eq!(
            st_run_experiment(dt.as_ptr(), bad.as_ptr(), out.as_ptr()),
            StStatus::Config
        );
        assert!(last_error().contains("whole number"));
        let unknown = CString::new("sweep").unwrap();
        assert_eq!(
            st_run_experiment(unknown.as_ptr(), ptr::null(), out.as_ptr()),
            StStatus::Config
        );
    }
    let version = unsafe { CStr::from_ptr(st_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
