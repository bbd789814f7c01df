//! C ABI for avg-orbit.
//!
//! Every function returns an [`AvgStatus`]; on failure a message is available
//! from [`avg_last_error_message`] on the same thread. Problems and
//! expressions are opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::ptr;
use std::sync::OnceLock;

use avg_orbit::averaging::{averaged_system, corollary_det, existence_check};
use avg_orbit::cli::config::{Problem, ProblemConfig};
use avg_orbit::expr::{parse, Expr};
use avg_orbit::model::{classify_equilibrium, eigenvalues, Classification};
use avg_orbit::ode::{fundamental_matrix, Chart, State2};
use avg_orbit::shooting::{find_periodic, ShootingError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AvgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Config = 4,
    Parse = 5,
    Evaluation = 6,
    Numerical = 7,
    /// Averaging did not establish a periodic orbit.
    ExistenceNotEstablished = 8,
    /// Shooting failed to converge.
    VerificationFailed = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AvgChart {
    Original = 0,
    Rescaled = 1,
    StandardForm = 2,
}

impl From<AvgChart> for Chart {
    fn from(c: AvgChart) -> Self {
        match c {
            AvgChart::Original => Chart::Original,
            AvgChart::Rescaled => Chart::Rescaled,
            AvgChart::StandardForm => Chart::StandardForm,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AvgClassification {
    AttractorNode = 0,
    AttractorFocus = 1,
    Center = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AvgComplex {
    pub re: f64,
    pub im: f64,
}

/// Averaged system and existence verdict.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AvgAnalysis {
    /// Row-major.
    pub m: [f64; 4],
    pub v: [f64; 2],
    pub period: f64,
    pub det_m: f64,
    pub v_norm: f64,
    /// Valid when `has_z0` is set.
    pub z0: [f64; 2],
    pub has_z0: bool,
    pub conditions_hold: bool,
    pub det_nonzero: bool,
    pub v_nonzero: bool,
    pub f_vanishes_at_origin: bool,
    pub coefficients_periodic: bool,
}

/// A periodic orbit found by shooting.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AvgOrbit {
    pub epsilon: f64,
    pub period: f64,
    pub x0_rescaled: [f64; 2],
    pub x0_original: [f64; 2],
    pub residual: f64,
    pub iterations: u32,
    /// Row-major.
    pub monodromy: [f64; 4],
    pub floquet: [AvgComplex; 2],
    pub attracting: bool,
}

/// Opaque problem handle.
pub struct AvgProblem {
    inner: Problem,
}

/// Opaque expression handle.
pub struct AvgExpr {
    inner: Expr,
    canonical: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

type Failure = (AvgStatus, String);

fn guard<F>(body: F) -> AvgStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match panic::catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => AvgStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            AvgStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    (AvgStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (AvgStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn positive(name: &str, x: f64) -> Result<(), Failure> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err((AvgStatus::InvalidArgument, format!("{name} must be positive and finite, got {x}")))
    }
}

/// Message for the last failure on this thread, or null if none. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn avg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version; the pointer is static.
#[no_mangle]
pub extern "C" fn avg_version() -> *const c_char {
    static VERSION: OnceLock<CString> = OnceLock::new();
    VERSION
        .get_or_init(|| CString::new(env!("CARGO_PKG_VERSION")).expect("no NUL in version"))
        .as_ptr()
}

/// Builds a problem from a JSON config.
///
/// # Safety
///
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn avg_problem_from_json(json: *const c_char, out: *mut *mut AvgProblem) -> AvgStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let text = read_str(json, "json")?;
        let problem = ProblemConfig::from_json(text)
            .and_then(|c| c.build())
            .map_err(|e| (AvgStatus::Config, e.to_string()))?;
        *out = Box::into_raw(Box::new(AvgProblem { inner: problem }));
        Ok(())
    })
}

/// Releases a problem. Null is ignored.
///
/// # Safety
///
/// `problem` must come from [`avg_problem_from_json`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn avg_problem_free(problem: *mut AvgProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Computes the averaged system and checks the existence conditions.
/// Returns `Ok` even when the conditions fail; see `conditions_hold`.
///
/// # Safety
///
/// `problem` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn avg_problem_analyze(problem: *const AvgProblem, out: *mut AvgAnalysis) -> AvgStatus {
    guard(|| {
        let problem = &problem.as_ref().ok_or_else(|| null("problem"))?.inner;
        let out = out_ref(out, "out")?;
        let sys = averaged_system(&problem.params, &problem.profile, &problem.config.quadrature_options())
            .map_err(|e| (AvgStatus::Numerical, e.to_string()))?;
        let verdict = existence_check(&sys, &problem.profile);
        let m = sys.m();
        let z0 = sys.z0();
        *out = AvgAnalysis {
            m: [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]],
            v: [sys.v()[0], sys.v()[1]],
            period: sys.period(),
            det_m: sys.det_m(),
            v_norm: verdict.v_norm,
            z0: z0.map_or([0.0; 2], |z| [z[0], z[1]]),
            has_z0: z0.is_some(),
            conditions_hold: verdict.conditions_hold,
            det_nonzero: verdict.det_nonzero,
            v_nonzero: verdict.v_nonzero,
            f_vanishes_at_origin: verdict.f_vanishes_at_origin,
            coefficients_periodic: verdict.coefficients_periodic,
        };
        Ok(())
    })
}

/// Shoots for the periodic orbit in `chart`, seeded by the averaging
/// prediction.
///
/// # Safety
///
/// `problem` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn avg_problem_find_orbit(
    problem: *const AvgProblem,
    chart: AvgChart,
    out: *mut AvgOrbit,
) -> AvgStatus {
    guard(|| {
        let problem = &problem.as_ref().ok_or_else(|| null("problem"))?.inner;
        let out = out_ref(out, "out")?;
        let (params, profile) = (&problem.params, &problem.profile);
        let sys = averaged_system(params, profile, &problem.config.quadrature_options())
            .map_err(|e| (AvgStatus::Numerical, e.to_string()))?;
        let verdict = existence_check(&sys, profile);
        let z0 = match (verdict.conditions_hold, sys.z0()) {
            (true, Some(z)) => State2::new(z[0], z[1]),
            _ => {
                return Err((
                    AvgStatus::ExistenceNotEstablished,
                    format!("existence conditions not established: {}", verdict.diagnostics.join("; ")),
                ))
            }
        };
        let chart = Chart::from(chart);
        let seed = Chart::Rescaled
            .convert(chart, 0.0, z0, params)
            .map_err(|e| (AvgStatus::InvalidArgument, e.to_string()))?;
        let orbit = find_periodic(params, profile, chart, seed, &problem.config.shooting_options()).map_err(|e| {
            let status = match e {
                ShootingError::Newton(_) | ShootingError::Integration(_) => AvgStatus::VerificationFailed,
                _ => AvgStatus::Numerical,
            };
            (status, e.to_string())
        })?;
        let numerical = |e: avg_orbit::ode::OdeError| (AvgStatus::Numerical, e.to_string());
        let rescaled = orbit.x0_in(Chart::Rescaled, params).map_err(numerical)?;
        let original = orbit.x0_in(Chart::Original, params).map_err(numerical)?;
        let m = orbit.monodromy;
        *out = AvgOrbit {
            epsilon: orbit.epsilon,
            period: orbit.period,
            x0_rescaled: [rescaled.x, rescaled.y],
            x0_original: [original.x, original.y],
            residual: orbit.residual,
            iterations: orbit.iterations as u32,
            monodromy: [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]],
            floquet: orbit.floquet.map(|z| AvgComplex { re: z.re, im: z.im }),
            attracting: orbit.is_attracting(),
        };
        Ok(())
    })
}

/// Eigenvalues of the linearization `θ̈ = -aθ - bθ̇`, written to `out[0..2]`.
///
/// # Safety
///
/// `out` must point to two writable `AvgComplex`.
#[no_mangle]
pub unsafe extern "C" fn avg_eigenvalues(a: f64, b: f64, out: *mut AvgComplex) -> AvgStatus {
    guard(|| {
        positive("a", a)?;
        if !(b.is_finite() && b >= 0.0) {
            return Err((AvgStatus::InvalidArgument, format!("b must be non-negative, got {b}")));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let (l1, l2) = eigenvalues(a, b);
        *out = AvgComplex { re: l1.re, im: l1.im };
        *out.add(1) = AvgComplex { re: l2.re, im: l2.im };
        Ok(())
    })
}

/// Type of the equilibrium at the origin.
///
/// # Safety
///
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn avg_classify(a: f64, b: f64, out: *mut AvgClassification) -> AvgStatus {
    guard(|| {
        positive("a", a)?;
        if !(b.is_finite() && b >= 0.0) {
            return Err((AvgStatus::InvalidArgument, format!("b must be non-negative, got {b}")));
        }
        *out_ref(out, "out")? = match classify_equilibrium(a, b) {
            Classification::AttractorNode => AvgClassification::AttractorNode,
            Classification::AttractorFocus => AvgClassification::AttractorFocus,
            Classification::Center => AvgClassification::Center,
        };
        Ok(())
    })
}

/// `det M` for constant coefficients `f1 ≡ c1`, `f2 ≡ c2`.
///
/// # Safety
///
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn avg_corollary_det(c1: f64, c2: f64, a: f64, b_bar: f64, out: *mut f64) -> AvgStatus {
    guard(|| {
        positive("a", a)?;
        *out_ref(out, "out")? = corollary_det(c1, c2, a, b_bar);
        Ok(())
    })
}

/// `e^{At}` for `A = [[0, 1], [-a, 0]]`, row-major into `out[0..4]`.
///
/// # Safety
///
/// `out` must point to four writable doubles.
#[no_mangle]
pub unsafe extern "C" fn avg_fundamental_matrix(t: f64, a: f64, out: *mut f64) -> AvgStatus {
    guard(|| {
        positive("a", a)?;
        if !t.is_finite() {
            return Err((AvgStatus::InvalidArgument, format!("t must be finite, got {t}")));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let m = fundamental_matrix(t, a);
        let out = std::slice::from_raw_parts_mut(out, 4);
        out.copy_from_slice(&[m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]);
        Ok(())
    })
}

/// Parses a perturbation expression in `t`, `theta`, `thetadot`.
///
/// # Safety
///
/// `src` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn avg_expr_parse(src: *const c_char, out: *mut *mut AvgExpr) -> AvgStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let text = read_str(src, "src")?;
        let expr = parse(text).map_err(|e| (AvgStatus::Parse, format!("{e} at offset {}", e.offset)))?;
        let canonical = CString::new(expr.canonical()).expect("canonical form has no NUL");
        *out = Box::into_raw(Box::new(AvgExpr { inner: expr, canonical }));
        Ok(())
    })
}

/// Evaluates an expression. Domain faults return `Evaluation`.
///
/// # Safety
///
/// `expr` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn avg_expr_eval(
    expr: *const AvgExpr,
    t: f64,
    theta: f64,
    thetadot: f64,
    out: *mut f64,
) -> AvgStatus {
    guard(|| {
        let expr = &expr.as_ref().ok_or_else(|| null("expr"))?.inner;
        let out = out_ref(out, "out")?;
        *out = expr
            .eval(t, theta, thetadot)
            .map_err(|e| (AvgStatus::Evaluation, e.to_string()))?;
        Ok(())
    })
}

/// Fully parenthesized form of `expr`, owned by the handle.
///
/// # Safety
///
/// `expr` must be a live handle; the result lives as long as it does.
#[no_mangle]
pub unsafe extern "C" fn avg_expr_canonical(expr: *const AvgExpr) -> *const c_char {
    expr.as_ref().map_or(ptr::null(), |e| e.canonical.as_ptr())
}

/// Releases an expression. Null is ignored.
///
/// # Safety
///
/// `expr` must come from [`avg_expr_parse`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn avg_expr_free(expr: *mut AvgExpr) {
    if !expr.is_null() {
        drop(Box::from_raw(expr));
    }
}
