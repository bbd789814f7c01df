//! First-order averaging for the perturbed pendulum.
//!
//! In standard-form coordinates the averaged field is affine,
//! `f₁(ζ) = Mζ - v`, with `M` and `v` given by integrals of the Taylor
//! coefficients `g0`, `f1`, `f2` over one period `T = 2pπ/√a`. A periodic
//! orbit exists for small ε when `det M ≠ 0`, `v ≠ 0` and `f(t,0,0) = 0`;
//! its initial condition in the rescaled chart tends to `z0 = M⁻¹v`.
//!
//! The general engine ([`average_field`], [`find_averaged_zero`]) averages
//! an arbitrary T-periodic field and is used to cross-check `M` and `v`.
//!
//! The average is deliberately *not* divided by `T`: `f₁(Z) = ∫₀ᵀ F₁(s,Z) ds`.
//! Zeros are unaffected, but residual magnitudes scale with `T`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::model::{ModelError, PendulumParams, PerturbationProfile};
use crate::newton::{self, NewtonError, NewtonOptions};
use crate::ode::fundamental_matrix;
use crate::quadrature::{integrate_vec, QuadratureError, QuadratureOptions};

/// Points of `[0, T)` at which `f(t,0,0) = 0` is checked.
pub const HYPOTHESIS_SAMPLES: usize = 64;
/// Largest `|f(t,0,0)|` accepted as zero.
pub const HYPOTHESIS_TOL: f64 = 1e-10;
/// `det M` counts as nonzero when `|det M| > DET_REL_TOL·‖M‖²_F`.
pub const DET_REL_TOL: f64 = 1e-8;
/// `M` with `‖M‖_F` at or below this is indistinguishable from zero at the
/// quadrature tolerance.
pub const MATRIX_ZERO_TOL: f64 = 1e-9;
/// `v` counts as nonzero when `‖v‖ > V_ZERO_TOL`.
pub const V_ZERO_TOL: f64 = 1e-10;
/// Tolerance on `|c(t+T) - c(t)|` for the coefficient periodicity check,
/// relative to `1 + max|c|`. Finite-difference coefficients are only
/// accurate to about this level.
pub const PERIODICITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AveragingError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Newton(#[from] NewtonError),
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// The averaged linear system `Mζ = v`.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedSystem {
    m: Matrix2<f64>,
    v: Vector2<f64>,
    period: f64,
    det_m: f64,
    z0: Option<Vector2<f64>>,
}

impl AveragedSystem {
    pub fn new(m: Matrix2<f64>, v: Vector2<f64>, period: f64) -> Self {
        let det_m = m.determinant();
        let z0 = if matrix_is_invertible(&m) {
            Some(solve_2x2(&m, &v))
        } else {
            None
        };
        Self {
            m,
            v,
            period,
            det_m,
            z0,
        }
    }

    pub fn m(&self) -> &Matrix2<f64> {
        &self.m
    }

    pub fn v(&self) -> &Vector2<f64> {
        &self.v
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn det_m(&self) -> f64 {
        self.det_m
    }

    /// `M⁻¹v`, present when `M` is numerically invertible.
    pub fn z0(&self) -> Option<Vector2<f64>> {
        self.z0
    }
}

impl Serialize for AveragedSystem {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let m = &self.m;
        let mut st = serializer.serialize_struct("AveragedSystem", 5)?;
        st.serialize_field("M", &[m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]])?;
        st.serialize_field("v", &[self.v[0], self.v[1]])?;
        st.serialize_field("T", &self.period)?;
        st.serialize_field("detM", &self.det_m)?;
        st.serialize_field("z0", &self.z0.map(|z| [z[0], z[1]]))?;
        st.end()
    }
}

/// Numerical invertibility test for `M`.
pub fn matrix_is_invertible(m: &Matrix2<f64>) -> bool {
    let frob2 = m.norm_squared();
    frob2.sqrt() > MATRIX_ZERO_TOL && m.determinant().abs() > DET_REL_TOL * frob2
}

/// Cramer's rule with one step of residual correction.
fn solve_2x2(m: &Matrix2<f64>, v: &Vector2<f64>) -> Vector2<f64> {
    let det = m.determinant();
    let inv = Matrix2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / det;
    let z = inv * v;
    z + inv * (v - m * z)
}

fn sample_weights(t: f64, a: f64) -> (f64, f64) {
    (a.sqrt() * t).sin_cos()
}

/// The averaged matrix `M` by adaptive quadrature over `[0, 2pπ/√a]`.
///
/// The damping contributes `-b̄·pπ/√a` to both diagonal entries (the
/// integral of `b̄ sin²(√a t)` and `b̄ cos²(√a t)` over `p` base periods).
pub fn compute_m(
    params: &PendulumParams,
    profile: &PerturbationProfile,
    opts: &QuadratureOptions,
) -> Result<Matrix2<f64>, AveragingError> {
    let a = params.a();
    let w = a.sqrt();
    let est = integrate_vec::<AveragingError, _>(
        |t| {
            let (s, c) = sample_weights(t, a);
            let f1 = profile.f1(t)?;
            let f2 = profile.f2(t)?;
            Ok(vec![
                s * (-c / w * f1 + s * f2),
                s / a * (-s * f1 - w * c * f2),
                c * (c * f1 - w * s * f2),
                c * (s / w * f1 + c * f2),
            ])
        },
        4,
        0.0,
        profile.period(),
        opts,
    )?;
    let damping = params.b_bar() * profile.p() as f64 * PI / w;
    let e = est.value;
    Ok(Matrix2::new(e[0] - damping, e[1], e[2], e[3] - damping))
}

/// The averaged vector `v = (∫ sin(√a t)/√a·g0 dt, -∫ cos(√a t)·g0 dt)`.
pub fn compute_v(
    params: &PendulumParams,
    profile: &PerturbationProfile,
    opts: &QuadratureOptions,
) -> Result<Vector2<f64>, AveragingError> {
    let a = params.a();
    let w = a.sqrt();
    let est = integrate_vec::<AveragingError, _>(
        |t| {
            let (s, c) = sample_weights(t, a);
            let g0 = profile.g0(t)?;
            Ok(vec![s / w * g0, -c * g0])
        },
        2,
        0.0,
        profile.period(),
        opts,
    )?;
    Ok(Vector2::new(est.value[0], est.value[1]))
}

/// Builds the averaged system for `params` and `profile`.
pub fn averaged_system(
    params: &PendulumParams,
    profile: &PerturbationProfile,
    opts: &QuadratureOptions,
) -> Result<AveragedSystem, AveragingError> {
    let m = compute_m(params, profile, opts)?;
    let v = compute_v(params, profile, opts)?;
    Ok(AveragedSystem::new(m, v, profile.period()))
}

/// `f₁(ζ) = Mζ - v`.
pub fn averaged_function(sys: &AveragedSystem, zeta: &Vector2<f64>) -> Vector2<f64> {
    sys.m * zeta - sys.v
}

/// Outcome of checking the existence conditions for a periodic orbit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExistenceVerdict {
    /// All conditions below hold.
    pub conditions_hold: bool,
    #[serde(rename = "detM")]
    pub det_m: f64,
    pub v_norm: f64,
    pub z0: Option<[f64; 2]>,
    pub det_nonzero: bool,
    pub v_nonzero: bool,
    /// `f(t,0,0) = 0` on the sample grid.
    pub f_vanishes_at_origin: bool,
    /// `g0, f1, f2` repeat after `T` on the sample grid.
    pub coefficients_periodic: bool,
    pub diagnostics: Vec<String>,
}

/// Checks `det M ≠ 0`, `v ≠ 0`, `f(t,0,0) = 0` and T-periodicity of the
/// coefficients. Failures are reported as diagnostics, never as errors.
pub fn existence_check(sys: &AveragedSystem, profile: &PerturbationProfile) -> ExistenceVerdict {
    let mut diagnostics = Vec::new();

    let det_nonzero = matrix_is_invertible(&sys.m);
    if !det_nonzero {
        diagnostics.push(format!(
            "det(M) = {:e} is numerically zero (‖M‖_F = {:e})",
            sys.det_m,
            sys.m.norm()
        ));
    }
    let v_norm = sys.v.norm();
    let v_nonzero = v_norm > V_ZERO_TOL;
    if !v_nonzero {
        diagnostics.push(format!("v = ({:e}, {:e}) is numerically zero", sys.v[0], sys.v[1]));
    }

    let f_vanishes_at_origin = match profile.max_f_at_origin(HYPOTHESIS_SAMPLES) {
        Ok(worst) if worst <= HYPOTHESIS_TOL => true,
        Ok(worst) => {
            diagnostics.push(format!(
                "hypothesis f(t,0,0) = 0 violated: max |f(t,0,0)| = {worst:e} on {HYPOTHESIS_SAMPLES} samples"
            ));
            false
        }
        Err(e) => {
            diagnostics.push(format!("could not evaluate f(t,0,0): {e}"));
            false
        }
    };

    let coefficients_periodic = match periodicity_defect(profile) {
        Ok((defect, scale)) if defect <= PERIODICITY_TOL * (1.0 + scale) => true,
        Ok((defect, _)) => {
            diagnostics.push(format!(
                "coefficients are not T-periodic: max |c(t+T) - c(t)| = {defect:e}"
            ));
            false
        }
        Err(e) => {
            diagnostics.push(format!("could not evaluate coefficients: {e}"));
            false
        }
    };

    let z0 = sys.z0.map(|z| [z[0], z[1]]);
    ExistenceVerdict {
        conditions_hold: det_nonzero && v_nonzero && f_vanishes_at_origin && coefficients_periodic,
        det_m: sys.det_m,
        v_norm,
        z0,
        det_nonzero,
        v_nonzero,
        f_vanishes_at_origin,
        coefficients_periodic,
        diagnostics,
    }
}

fn periodicity_defect(profile: &PerturbationProfile) -> Result<(f64, f64), ModelError> {
    let defect = profile.max_periodicity_defect(HYPOTHESIS_SAMPLES)?;
    let mut scale = 0.0f64;
    for k in 0..HYPOTHESIS_SAMPLES {
        let t = profile.period() * k as f64 / HYPOTHESIS_SAMPLES as f64;
        scale = scale
            .max(profile.g0(t)?.abs())
            .max(profile.f1(t)?.abs())
            .max(profile.f2(t)?.abs());
    }
    Ok((defect, scale))
}

/// `det M` for constant `f1 ≡ C1`, `f2 ≡ C2` and `p = 1`:
/// `(C1² + a(b̄ - C2)²)π²/a²`.
pub fn corollary_det(c1: f64, c2: f64, a: f64, b_bar: f64) -> f64 {
    (c1 * c1 + a * (b_bar - c2).powi(2)) * PI * PI / (a * a)
}

/// `∫₀ᵀ F₁(s, Z) ds`, component-wise.
pub fn average_field<F>(
    field: F,
    period: f64,
    z: &DVector<f64>,
    opts: &QuadratureOptions,
) -> Result<DVector<f64>, AveragingError>
where
    F: Fn(f64, &DVector<f64>) -> Result<DVector<f64>, AveragingError>,
{
    if !(period.is_finite() && period > 0.0) {
        return Err(AveragingError::Invalid(format!("period must be positive, got {period}")));
    }
    let n = z.len();
    let est = integrate_vec::<AveragingError, _>(
        |s| {
            let value = field(s, z)?;
            if value.len() != n {
                return Err(AveragingError::Invalid(format!(
                    "field returned {} components for a {n}-vector",
                    value.len()
                )));
            }
            Ok(value.iter().copied().collect())
        },
        n,
        0.0,
        period,
        opts,
    )?;
    Ok(DVector::from_vec(est.value))
}

/// The pendulum's first-order standard-form field
/// `e^{-As} F(s, e^{As} Z)` with `F(s, x) = (0, g0 + f1·x₁ + (f2 - b̄)·x₂)`.
pub fn pendulum_standard_field<'a>(
    params: &'a PendulumParams,
    profile: &'a PerturbationProfile,
) -> impl Fn(f64, &DVector<f64>) -> Result<DVector<f64>, AveragingError> + 'a {
    move |s, z| {
        if z.len() != 2 {
            return Err(AveragingError::Invalid(format!(
                "pendulum field is planar, got a {}-vector",
                z.len()
            )));
        }
        let a = params.a();
        let x = fundamental_matrix(s, a) * Vector2::new(z[0], z[1]);
        let forcing = profile.g0(s)? + profile.f1(s)? * x[0] + (profile.f2(s)? - params.b_bar()) * x[1];
        let out = fundamental_matrix(-s, a) * Vector2::new(0.0, forcing);
        Ok(DVector::from_row_slice(&[out[0], out[1]]))
    }
}

/// A nondegenerate zero of the averaged field.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedZero {
    pub zero: DVector<f64>,
    /// Forward-difference Jacobian of the averaged field at `zero`.
    pub jacobian: DMatrix<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Damped Newton on `Z ↦ ∫₀ᵀ F₁(s, Z) ds` from `guess`.
pub fn find_averaged_zero<F>(
    field: F,
    period: f64,
    guess: &DVector<f64>,
    quad: &QuadratureOptions,
    newton_opts: &NewtonOptions,
) -> Result<AveragedZero, AveragingError>
where
    F: Fn(f64, &DVector<f64>) -> Result<DVector<f64>, AveragingError>,
{
    let mut averaged = |z: &DVector<f64>| average_field(&field, period, z, quad);
    let sol = newton::solve(&mut averaged, guess.clone(), newton_opts)?;
    let jacobian = newton::fd_jacobian(&mut averaged, &sol.x, &sol.fx, newton_opts.fd_scale)?;
    Ok(AveragedZero {
        zero: sol.x,
        jacobian,
        residual: sol.residual,
        iterations: sol.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::model::{coefficient, Forcing, RationalPeriod};
    use std::sync::Arc;

    fn forcing(src: &str) -> Arc<dyn Forcing> {
        Arc::new(parse(src).unwrap())
    }

    fn profile(a: f64, f: &str, g: &str) -> PerturbationProfile {
        PerturbationProfile::with_base_period(a, forcing(f), forcing(g)).unwrap()
    }

    fn quad() -> QuadratureOptions {
        QuadratureOptions::default()
    }

    fn sim() -> (PendulumParams, PerturbationProfile) {
        (
            PendulumParams::new(1.0, 1.0, 0.1).unwrap(),
            profile(1.0, "0", "sin(t)"),
        )
    }

    #[test]
    fn m_for_constant_coefficients() {
        for &(c1, c2, a, b) in &[(0.0, 0.0, 1.0, 1.0), (2.0, -1.0, 4.0, 0.5), (-3.0, 2.5, 0.7, 2.0)] {
            let params = PendulumParams::new(a, b, 0.1).unwrap();
            let prof = profile(a, &format!("{c1}*theta + {c2}*thetadot"), "0");
            let m = compute_m(&params, &prof, &quad()).unwrap();
            let w = a.sqrt();
            let expected = Matrix2::new(
                (c2 - b) * PI / w,
                -c1 * PI / (a * w),
                c1 * PI / w,
                (c2 - b) * PI / w,
            );
            assert!((m - expected).abs().max() < 1e-10, "{m} vs {expected}");
        }
    }

    #[test]
    fn m_is_minus_pi_identity_for_simulation() {
        let (params, prof) = sim();
        let m = compute_m(&params, &prof, &quad()).unwrap();
        assert!((m + Matrix2::identity() * PI).abs().max() < 1e-10);
    }

    #[test]
    fn m_vanishes_without_damping_or_forcing() {
        let params = PendulumParams::new(1.0, 0.0, 0.0).unwrap();
        let m = compute_m(&params, &profile(1.0, "0", "0"), &quad()).unwrap();
        assert_eq!(m, Matrix2::zeros());
    }

    #[test]
    fn v_examples() {
        let params = PendulumParams::new(1.0, 1.0, 0.1).unwrap();
        let v = compute_v(&params, &profile(1.0, "0", "sin(t)"), &quad()).unwrap();
        assert!((v - Vector2::new(PI, 0.0)).norm() < 1e-10);
        let v = compute_v(&params, &profile(1.0, "0", "0"), &quad()).unwrap();
        assert_eq!(v, Vector2::zeros());
        let v = compute_v(&params, &profile(1.0, "0", "cos(t)"), &quad()).unwrap();
        assert!((v - Vector2::new(0.0, -PI)).norm() < 1e-10);
    }

    #[test]
    fn damping_offset_scales_with_p() {
        // f, g with period 2·(2π): p = 2 and the diagonal offset doubles
        let a = 1.0;
        let params = PendulumParams::new(a, 1.0, 0.1).unwrap();
        let two = RationalPeriod::new(2, 1, a).unwrap();
        let prof = PerturbationProfile::new(forcing("0"), forcing("sin(t/2)"), two, two).unwrap();
        assert_eq!(prof.p(), 2);
        let m = compute_m(&params, &prof, &quad()).unwrap();
        assert!((m + Matrix2::identity() * 2.0 * PI).abs().max() < 1e-10);
        let z = DVector::from_row_slice(&[0.4, -1.1]);
        let via_engine = average_field(
            pendulum_standard_field(&params, &prof),
            prof.period(),
            &z,
            &quad(),
        )
        .unwrap();
        let v = compute_v(&params, &prof, &quad()).unwrap();
        let affine = m * Vector2::new(z[0], z[1]) - v;
        assert!((via_engine[0] - affine[0]).abs() < 2e-9);
        assert!((via_engine[1] - affine[1]).abs() < 2e-9);
    }

    #[test]
    fn averaged_function_examples() {
        let sys = AveragedSystem::new(-Matrix2::identity() * PI, Vector2::new(PI, 0.0), 2.0 * PI);
        assert_eq!(averaged_function(&sys, &Vector2::zeros()), Vector2::new(-PI, 0.0));
        assert!(averaged_function(&sys, &Vector2::new(-1.0, 0.0)).norm() < 1e-15);
        let z0 = sys.z0().unwrap();
        assert!(averaged_function(&sys, &z0).norm() < 1e-10);
    }

    #[test]
    fn simulation_verdict() {
        let (params, prof) = sim();
        let sys = averaged_system(&params, &prof, &quad()).unwrap();
        let verdict = existence_check(&sys, &prof);
        assert!(verdict.conditions_hold, "{:?}", verdict.diagnostics);
        assert!((verdict.det_m - PI * PI).abs() < 1e-8);
        let z0 = verdict.z0.unwrap();
        assert!((z0[0] + 1.0).abs() < 1e-10 && z0[1].abs() < 1e-10);
        assert!(verdict.diagnostics.is_empty());
    }

    #[test]
    fn zero_forcing_fails_v_condition() {
        let params = PendulumParams::new(1.0, 1.0, 0.1).unwrap();
        let prof = profile(1.0, "0", "0");
        let sys = averaged_system(&params, &prof, &quad()).unwrap();
        let verdict = existence_check(&sys, &prof);
        assert!(!verdict.conditions_hold);
        assert!(!verdict.v_nonzero);
        assert!(verdict.det_nonzero);
    }

    #[test]
    fn corollary_degenerate_matrix() {
        let params = PendulumParams::new(1.0, 1.5, 0.1).unwrap();
        let prof = profile(1.0, "1.5*thetadot", "sin(t)");
        let sys = averaged_system(&params, &prof, &quad()).unwrap();
        let verdict = existence_check(&sys, &prof);
        assert!(!verdict.det_nonzero);
        assert!(!verdict.conditions_hold);
        assert!(verdict.z0.is_none());
        assert!(sys.m().abs().max() < 1e-12);
    }

    #[test]
    fn hypothesis_violation_is_diagnosed() {
        let params = PendulumParams::new(1.0, 1.0, 0.1).unwrap();
        let prof = profile(1.0, "1", "sin(t)");
        let sys = averaged_system(&params, &prof, &quad()).unwrap();
        let verdict = existence_check(&sys, &prof);
        assert!(verdict.det_nonzero && verdict.v_nonzero);
        assert!(!verdict.f_vanishes_at_origin);
        assert!(!verdict.conditions_hold);
        assert!(verdict.diagnostics.iter().any(|d| d.contains("f(t,0,0)")));
    }

    #[test]
    fn aperiodic_coefficients_are_diagnosed() {
        let params = PendulumParams::new(1.0, 1.0, 0.1).unwrap();
        let prof = profile(1.0, "0", "sin(t)").with_g0(coefficient(|t| t));
        let sys = averaged_system(&params, &prof, &quad()).unwrap();
        let verdict = existence_check(&sys, &prof);
        assert!(!verdict.coefficients_periodic);
        assert!(!verdict.conditions_hold);
    }

    #[test]
    fn z0_residual_invariant() {
        let sys = AveragedSystem::new(
            Matrix2::new(1.0, 2.0, 3.0, 4.0 + 1e-6),
            Vector2::new(1.0, -2.0),
            1.0,
        );
        let z0 = sys.z0().unwrap();
        assert!((sys.m() * z0 - sys.v()).norm() <= 1e-10 * (1.0 + sys.v().norm()));
    }

    #[test]
    fn serializes_row_major() {
        let sys = AveragedSystem::new(Matrix2::new(1.0, 2.0, 3.0, 4.0), Vector2::new(5.0, 6.0), 7.0);
        let json = serde_json::to_value(&sys).unwrap();
        assert_eq!(json["M"], serde_json::json!([1.0, 2.0, 3.0, 4.0]));
        assert_eq!(json["T"], serde_json::json!(7.0));
        assert_eq!(json["detM"], serde_json::json!(-2.0));
        let singular = AveragedSystem::new(Matrix2::zeros(), Vector2::new(5.0, 6.0), 7.0);
        assert!(serde_json::to_value(&singular).unwrap()["z0"].is_null());
    }

    #[test]
    fn corollary_det_examples() {
        assert!((corollary_det(0.0, 0.0, 1.0, 1.0) - PI * PI).abs() < 1e-15);
        assert_eq!(corollary_det(0.0, 0.7, 2.0, 0.7), 0.0);
        assert!((corollary_det(2.0, 0.0, 4.0, 1.0) - PI * PI / 2.0).abs() < 1e-14);
        let params = PendulumParams::new(4.0, 1.0, 0.1).unwrap();
        let m = compute_m(&params, &profile(4.0, "2*theta", "0"), &quad()).unwrap();
        assert!((m.determinant() - PI * PI / 2.0).abs() < 1e-9);
    }

    #[test]
    fn average_field_examples() {
        let z = DVector::from_row_slice(&[1.5, -2.0]);
        let out = average_field(|_, z| Ok(z.clone()), 2.0 * PI, &z, &quad()).unwrap();
        assert!((out - &z * (2.0 * PI)).norm() < 1e-12);
        let out = average_field(
            |s, _| Ok(DVector::from_row_slice(&[s.sin(), s.cos()])),
            2.0 * PI,
            &z,
            &quad(),
        )
        .unwrap();
        assert!(out.norm() < 1e-12);
        assert!(average_field(|_, z| Ok(z.clone()), 0.0, &z, &quad()).is_err());
    }

    #[test]
    fn engine_zero_matches_closed_form() {
        let (params, prof) = sim();
        let zero = find_averaged_zero(
            pendulum_standard_field(&params, &prof),
            prof.period(),
            &DVector::zeros(2),
            &quad(),
            &NewtonOptions::default(),
        )
        .unwrap();
        assert!((zero.zero[0] + 1.0).abs() < 1e-8 && zero.zero[1].abs() < 1e-8);
        assert!(zero.jacobian.determinant().abs() > 1.0);
    }

    #[test]
    fn affine_field_zero_in_one_step() {
        let c = DVector::from_row_slice(&[0.25, -4.0]);
        let zero = find_averaged_zero(
            |_, z| Ok(z - &c),
            1.0,
            &DVector::zeros(2),
            &quad(),
            &NewtonOptions::default(),
        )
        .unwrap();
        assert_eq!(zero.iterations, 1);
        assert!((zero.zero - c).norm() < 1e-12);
    }

    #[test]
    fn constant_field_has_no_zero() {
        let err = find_averaged_zero(
            |_, _| Ok(DVector::from_row_slice(&[1.0, 0.0])),
            1.0,
            &DVector::zeros(2),
            &quad(),
            &NewtonOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            AveragingError::Newton(NewtonError::SingularJacobian { .. })
                | AveragingError::Newton(NewtonError::MaxIterations { .. })
        ));
    }
}
