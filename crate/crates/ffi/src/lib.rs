//! C ABI for corrineq.
//!
//! Every fallible function returns a [`CiStatus`] and writes its result
//! through an out-pointer. On failure `ci_last_error()` returns a message
//! for the calling thread. Handles are opaque and must be released with the
//! matching `_free` function; strings returned by the library are released
//! with [`ci_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use corrineq::dsl::{format_rs, Comparator, RsExpression, ScenarioSpec};
use corrineq::lhv::classical_extrema;
use corrineq::poly::{derive_inequality, Derivation};
use corrineq::quantum::{hybrid_f_product, hybrid_f_singlet, tsirelson_envelope, BlochVector, HybridSettings};
use corrineq::report::{
    bound_report, check_report, derive_report, reproduce, reproduce_all, CheckVerdict, Report, ReportError, Source,
    Target, TargetOptions,
};

/// Result of a call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    DeriveError = 4,
    ComputeError = 5,
    InvalidArgument = 6,
    Panic = 7,
}

/// Parsed sum-of-squares expression.
pub struct CiExpression(RsExpression);

/// Parsed measurement scenario.
pub struct CiScenario(ScenarioSpec);

/// Correlation inequality derived from an expression.
pub struct CiInequality(Derivation);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CiStatus, String);

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        let status = match e {
            ReportError::Parse { .. } | ReportError::Observation { .. } => CiStatus::ParseError,
            ReportError::Derive(_) => CiStatus::DeriveError,
            ReportError::UnknownTarget(_) | ReportError::Unsupported(_) => CiStatus::InvalidArgument,
            _ => CiStatus::ComputeError,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CiStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CiStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CiStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(CiStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CiStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn opt_text<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(CiStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out<T>(p: *mut T, value: T) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure(CiStatus::NullPointer, "output pointer is null".into()));
    }
    p.write(value);
    Ok(())
}

fn to_c(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

unsafe fn out_string(p: *mut *mut c_char, s: String) -> Result<(), Failure> {
    out(p, to_c(s))
}

fn json(report: Report) -> String {
    report.to_json()
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn ci_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by the library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ci_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ci_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a sum-of-squares expression such as `(X1 - Y1 - Y2)^2 + (X2 - Y1 + Y2)^2 >= 2`.
#[no_mangle]
pub unsafe extern "C" fn ci_expression_parse(source: *const c_char, out_expr: *mut *mut CiExpression) -> CiStatus {
    guard(|| {
        let expr = Source::inline("expression", text(source, "source")?).expression()?;
        out(out_expr, Box::into_raw(Box::new(CiExpression(expr))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn ci_expression_free(expr: *mut CiExpression) {
    if !expr.is_null() {
        drop(Box::from_raw(expr));
    }
}

/// Canonical text of an expression.
#[no_mangle]
pub unsafe extern "C" fn ci_expression_format(expr: *const CiExpression, out_text: *mut *mut c_char) -> CiStatus {
    guard(|| {
        let e = handle(expr, "expression")?;
        out_string(out_text, format_rs(&e.0))
    })
}

/// Parses a scenario description.
#[no_mangle]
pub unsafe extern "C" fn ci_scenario_parse(source: *const c_char, out_scenario: *mut *mut CiScenario) -> CiStatus {
    guard(|| {
        let s = Source::inline("scenario", text(source, "source")?).scenario()?;
        out(out_scenario, Box::into_raw(Box::new(CiScenario(s))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn ci_scenario_free(scenario: *mut CiScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Number of variables and of measurement contexts in a scenario.
#[no_mangle]
pub unsafe extern "C" fn ci_scenario_size(
    scenario: *const CiScenario,
    out_variables: *mut usize,
    out_contexts: *mut usize,
) -> CiStatus {
    guard(|| {
        let s = &handle(scenario, "scenario")?.0;
        out(out_variables, s.variables().len())?;
        out(out_contexts, s.contexts().len())
    })
}

/// Expands the squares of `expr` into a correlation inequality.
#[no_mangle]
pub unsafe extern "C" fn ci_inequality_derive(
    expr: *const CiExpression,
    out_ineq: *mut *mut CiInequality,
) -> CiStatus {
    guard(|| {
        let e = handle(expr, "expression")?;
        let d = derive_inequality(&e.0).map_err(|err| Failure(CiStatus::DeriveError, err.to_string()))?;
        out(out_ineq, Box::into_raw(Box::new(CiInequality(d))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn ci_inequality_free(ineq: *mut CiInequality) {
    if !ineq.is_null() {
        drop(Box::from_raw(ineq));
    }
}

/// The inequality as text, e.g. `<X1Y1> + <X1Y2> + <X2Y1> - <X2Y2> <= 2`.
#[no_mangle]
pub unsafe extern "C" fn ci_inequality_format(ineq: *const CiInequality, out_text: *mut *mut c_char) -> CiStatus {
    guard(|| {
        let i = handle(ineq, "inequality")?;
        out_string(out_text, i.0.inequality.to_string())
    })
}

/// Bound and direction: `*out_upper` is 1 for `<=` and 0 for `>=`.
#[no_mangle]
pub unsafe extern "C" fn ci_inequality_bound(
    ineq: *const CiInequality,
    out_bound: *mut f64,
    out_upper: *mut i32,
) -> CiStatus {
    guard(|| {
        let i = &handle(ineq, "inequality")?.0.inequality;
        out(out_bound, i.bound_f64())?;
        out(out_upper, i32::from(i.direction == Comparator::AtMost))
    })
}

#[no_mangle]
pub unsafe extern "C" fn ci_inequality_term_count(ineq: *const CiInequality, out_count: *mut usize) -> CiStatus {
    guard(|| {
        let i = handle(ineq, "inequality")?;
        out(out_count, i.0.inequality.terms.len())
    })
}

/// Smallest and largest value of the left-hand side over ±1 assignments.
#[no_mangle]
pub unsafe extern "C" fn ci_inequality_classical_range(
    ineq: *const CiInequality,
    out_min: *mut i64,
    out_max: *mut i64,
) -> CiStatus {
    guard(|| {
        let i = handle(ineq, "inequality")?;
        let ext = classical_extrema(&i.0.inequality.lhs())
            .map_err(|e| Failure(CiStatus::ComputeError, e.to_string()))?;
        out(out_min, ext.min)?;
        out(out_max, ext.max)
    })
}

/// Full derivation (terms, groups, warnings) as JSON.
#[no_mangle]
pub unsafe extern "C" fn ci_inequality_json(ineq: *const CiInequality, out_json: *mut *mut c_char) -> CiStatus {
    guard(|| {
        let i = handle(ineq, "inequality")?;
        let s = serde_json::to_string(&i.0).map_err(|e| Failure(CiStatus::ComputeError, e.to_string()))?;
        out_string(out_json, s)
    })
}

/// Hybrid `F` for coplanar settings (angles in the x-z plane, radians).
/// `state` is 0 for the singlet, 1 for the product state with both qubits
/// along the Y2 direction.
#[no_mangle]
pub unsafe extern "C" fn ci_hybrid_f(
    state: i32,
    x1: f64,
    x2: f64,
    y1: f64,
    y2: f64,
    out_value: *mut f64,
) -> CiStatus {
    guard(|| {
        let s = HybridSettings::coplanar(x1, x2, y1, y2);
        let v = match state {
            0 => hybrid_f_singlet(&s),
            1 => {
                let n = BlochVector::in_xz_plane(y2);
                hybrid_f_product(&n, &n, &s)
            }
            _ => return Err(Failure(CiStatus::InvalidArgument, format!("unknown state {state}"))),
        };
        out(out_value, v)
    })
}

/// Largest singlet `F` over settings with the given two relative angles.
#[no_mangle]
pub unsafe extern "C" fn ci_tsirelson_envelope(theta1: f64, theta2: f64, out_value: *mut f64) -> CiStatus {
    guard(|| out(out_value, tsirelson_envelope(theta1, theta2)))
}

/// Derive report as JSON. `scenario` may be null.
#[no_mangle]
pub unsafe extern "C" fn ci_derive_json(
    expression: *const c_char,
    scenario: *const c_char,
    out_json: *mut *mut c_char,
) -> CiStatus {
    guard(|| {
        let input = Source::inline("expression", text(expression, "expression")?);
        let scn = opt_text(scenario, "scenario")?.map(|t| Source::inline("scenario", t));
        out_string(out_json, json(derive_report(&input, scn.as_ref())?))
    })
}

/// Bound report (classical and no-disturbance optima) as JSON. `scenario`
/// may be null.
#[no_mangle]
pub unsafe extern "C" fn ci_bound_json(
    expression: *const c_char,
    scenario: *const c_char,
    out_json: *mut *mut c_char,
) -> CiStatus {
    guard(|| {
        let input = Source::inline("expression", text(expression, "expression")?);
        let scn = opt_text(scenario, "scenario")?.map(|t| Source::inline("scenario", t));
        out_string(out_json, json(bound_report(&input, scn.as_ref())?))
    })
}

/// Joint-distribution test of observed correlators. `*out_feasible` is 1
/// when a joint distribution exists within `tolerance`. `inequality` may be
/// null.
#[no_mangle]
pub unsafe extern "C" fn ci_check_json(
    scenario: *const c_char,
    observations: *const c_char,
    inequality: *const c_char,
    tolerance: f64,
    out_feasible: *mut i32,
    out_json: *mut *mut c_char,
) -> CiStatus {
    guard(|| {
        if tolerance.is_nan() || tolerance < 0.0 {
            return Err(Failure(CiStatus::InvalidArgument, "tolerance must be non-negative".into()));
        }
        let scn = Source::inline("scenario", text(scenario, "scenario")?);
        let obs = Source::inline("observations", text(observations, "observations")?);
        let ineq = opt_text(inequality, "inequality")?.map(|t| Source::inline("inequality", t));
        let (report, verdict) = check_report(&scn, &obs, ineq.as_ref(), tolerance)?;
        out(out_feasible, i32::from(verdict == CheckVerdict::Feasible))?;
        out_string(out_json, json(report))
    })
}

/// Runs a reproduction target by name (`all` runs every one). `*out_pass`
/// is 1 when every check passed.
#[no_mangle]
pub unsafe extern "C" fn ci_reproduce_json(
    target: *const c_char,
    shots: u64,
    seed: u64,
    out_pass: *mut i32,
    out_json: *mut *mut c_char,
) -> CiStatus {
    guard(|| {
        let name = text(target, "target")?;
        let options = TargetOptions { shots, seed, ..TargetOptions::default() };
        let report = if name == "all" {
            reproduce_all(&options)?
        } else {
            reproduce(name.parse::<Target>()?, &options)?
        };
        out(out_pass, i32::from(report.result["pass"].as_bool().unwrap_or(false)))?;
        out_string(out_json, json(report))
    })
}
