use std::ffi::{c_char, CStr, CString};
use std::ptr;

use corrineq_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(p: *mut c_char) -> String {
    assert!(!p.is_null());
    let s = CStr::from_ptr(p).to_str().unwrap().to_string();
    ci_string_free(p);
    s
}

unsafe fn last_error() -> String {
    let p = ci_last_error();
    assert!(!p.is_null());
    CStr::from_ptr(p).to_string_lossy().into_owned()
}

#[test]
fn derive_through_handles() {
    unsafe {
        let mut expr = ptr::null_mut();
        let src = c("(X1 - Y1 - Y2)^2 + (X2 - Y1 + Y2)^2 >= 2");
        assert_eq!(ci_expression_parse(src.as_ptr(), &mut expr), CiStatus::Ok);
        assert!(ci_last_error().is_null());

        let mut text = ptr::null_mut();
        assert_eq!(ci_expression_format(expr, &mut text), CiStatus::Ok);
        assert_eq!(take(text), "(X1 - Y1 - Y2)^2 + (X2 - Y1 + Y2)^2 >= 2");

        let mut ineq = ptr::null_mut();
        assert_eq!(ci_inequality_derive(expr, &mut ineq), CiStatus::Ok);
        ci_expression_free(expr);

        let mut text = ptr::null_mut();
        assert_eq!(ci_inequality_format(ineq, &mut text), CiStatus::Ok);
        assert_eq!(take(text), "<X1Y1> + <X1Y2> + <X2Y1> - <X2Y2> <= 2");

        let (mut bound, mut upper, mut n) = (0.0, -1, 0usize);
        assert_eq!(ci_inequality_bound(ineq, &mut bound, &mut upper), CiStatus::Ok);
        assert_eq!((bound, upper), (2.0, 1));
        assert_eq!(ci_inequality_term_count(ineq, &mut n), CiStatus::Ok);
        assert_eq!(n, 4);

        let (mut lo, mut hi) = (0i64, 0i64);
        assert_eq!(ci_inequality_classical_range(ineq, &mut lo, &mut hi), CiStatus::Ok);
        assert_eq!((lo, hi), (-2, 2));

        let mut js = ptr::null_mut();
        assert_eq!(ci_inequality_json(ineq, &mut js), CiStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(js)).unwrap();
        assert_eq!(v["inequality"]["bound"], "2");
        ci_inequality_free(ineq);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut expr = ptr::null_mut();
        let bad = c("(X1 + Y1 >= 2");
        assert_eq!(ci_expression_parse(bad.as_ptr(), &mut expr), CiStatus::ParseError);
        assert!(expr.is_null());
        assert!(last_error().contains("expression"));

        assert_eq!(ci_expression_parse(ptr::null(), &mut expr), CiStatus::NullPointer);
        let src = c("(X1)^2 >= 1");
        assert_eq!(ci_expression_parse(src.as_ptr(), ptr::null_mut()), CiStatus::NullPointer);

        let invalid = [0xffu8 as c_char, 0];
        assert_eq!(ci_expression_parse(invalid.as_ptr(), &mut expr), CiStatus::InvalidUtf8);

        let mut v = 0.0;
        assert_eq!(ci_hybrid_f(7, 0.0, 0.0, 0.0, 0.0, &mut v), CiStatus::InvalidArgument);

        let (mut pass, mut js) = (0, ptr::null_mut());
        let t = c("no-such-target");
        assert_eq!(ci_reproduce_json(t.as_ptr(), 1000, 1, &mut pass, &mut js), CiStatus::InvalidArgument);
        assert!(last_error().contains("chsh-bound"));

        // Freeing null is a no-op.
        ci_expression_free(ptr::null_mut());
        ci_inequality_free(ptr::null_mut());
        ci_scenario_free(ptr::null_mut());
        ci_string_free(ptr::null_mut());
    }
}

#[test]
fn hybrid_values() {
    unsafe {
        let s = std::f64::consts::SQRT_2;
        let q = std::f64::consts::FRAC_PI_4;
        let mut v = 0.0;
        assert_eq!(ci_hybrid_f(0, 0.0, q, 2.0 * q, 3.0 * q, &mut v), CiStatus::Ok);
        assert!((v - 2.0 * s).abs() < 1e-12, "{v}");
        // Both qubits along Y2: X2 is orthogonal to it and the three other
        // terms are each cos(π/4).
        assert_eq!(ci_hybrid_f(1, q, 0.0, 3.0 * q, 2.0 * q, &mut v), CiStatus::Ok);
        assert!((v - 3.0 / s).abs() < 1e-12, "{v}");
        assert_eq!(ci_tsirelson_envelope(q, q, &mut v), CiStatus::Ok);
        assert!(v <= 2.0 * s + 1e-12);
    }
}

#[test]
fn check_reports_feasibility() {
    let scn = c(include_str!("../../core/fixtures/chsh.scn"));
    let singlet = c(include_str!("../../core/fixtures/singlet_chsh.obs"));
    let classical = c(include_str!("../../core/fixtures/classical_chsh.obs"));
    unsafe {
        let mut scenario = ptr::null_mut();
        assert_eq!(ci_scenario_parse(scn.as_ptr(), &mut scenario), CiStatus::Ok);
        let (mut vars, mut ctx) = (0usize, 0usize);
        assert_eq!(ci_scenario_size(scenario, &mut vars, &mut ctx), CiStatus::Ok);
        assert_eq!((vars, ctx), (4, 4));
        ci_scenario_free(scenario);

        let (mut feasible, mut js) = (-1, ptr::null_mut());
        let st = ci_check_json(scn.as_ptr(), singlet.as_ptr(), ptr::null(), 1e-9, &mut feasible, &mut js);
        assert_eq!(st, CiStatus::Ok);
        assert_eq!(feasible, 0);
        let v: serde_json::Value = serde_json::from_str(&take(js)).unwrap();
        assert_eq!(v["command"], "check");

        let st = ci_check_json(scn.as_ptr(), classical.as_ptr(), ptr::null(), 1e-9, &mut feasible, &mut js);
        assert_eq!(st, CiStatus::Ok);
        assert_eq!(feasible, 1);
        ci_string_free(js);

        let st = ci_check_json(scn.as_ptr(), classical.as_ptr(), ptr::null(), -1.0, &mut feasible, &mut js);
        assert_eq!(st, CiStatus::InvalidArgument);
    }
}

#[test]
fn reports_match_the_core_library() {
    let src = "(X1 - Y1 - Y2)^2 + (X2 - Y1 + Y2)^2 >= 2";
    let scn = include_str!("../../core/fixtures/chsh.scn");
    let expected = corrineq::report::bound_report(
        &corrineq::report::Source::inline("expression", src),
        Some(&corrineq::report::Source::inline("scenario", scn)),
    )
    .unwrap()
    .to_json();
    unsafe {
        let mut js = ptr::null_mut();
        assert_eq!(ci_bound_json(c(src).as_ptr(), c(scn).as_ptr(), &mut js), CiStatus::Ok);
        assert_eq!(take(js), expected);
        assert_eq!(ci_derive_json(c(src).as_ptr(), ptr::null(), &mut js), CiStatus::Ok);
        assert!(take(js).contains("\"derive\""));

        let mut pass = 0;
        assert_eq!(ci_reproduce_json(c("chsh-bound").as_ptr(), 1000, 1, &mut pass, &mut js), CiStatus::Ok);
        assert_eq!(pass, 1);
        ci_string_free(js);
    }
}

#[test]
fn header_declares_the_api() {
    let h = include_str!("../include/corrineq.h");
    for name in [
        "ci_last_error",
        "ci_string_free",
        "ci_expression_parse",
        "ci_inequality_derive",
        "ci_check_json",
        "ci_reproduce_json",
        "CI_STATUS_OK",
        "typedef struct CiInequality CiInequality",
    ] {
        assert!(h.contains(name), "{name} missing from header");
    }
}
