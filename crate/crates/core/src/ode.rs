//! Right-hand sides of the perturbed pendulum in three charts, the
//! fundamental matrix of the unperturbed center, and an adaptive
//! Dormand–Prince 5(4) integrator.
//!
//! Charts:
//! - original: `(θ, θ̇)`,
//! - rescaled: `(φ, φ̇)` with `θ = εφ`,
//! - standard form: `y = e^{-At} (φ, φ̇)` with `A = [[0, 1], [-a, 0]]`.

use std::fmt;
use std::io::{self, Write};
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Forcing, PendulumParams, PerturbationProfile};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t}: h = {h:e}")]
    StepUnderflow { t: f64, h: f64 },
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("exceeded {max_steps} steps before reaching t = {t1}")]
    TooManySteps { max_steps: usize, t1: f64 },
    #[error("invalid integration request: {0}")]
    InvalidRequest(String),
    #[error("right-hand side failed at t = {t}: {message}")]
    Evaluation { t: f64, message: String },
}

/// A planar state; the meaning of the components depends on the chart.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State2 {
    pub x: f64,
    pub y: f64,
}

impl State2 {
    pub const ZERO: State2 = State2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn to_vector(self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }

    pub fn from_vector(v: Vector2<f64>) -> Self {
        Self::new(v[0], v[1])
    }
}

impl Add for State2 {
    type Output = State2;
    fn add(self, o: State2) -> State2 {
        State2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for State2 {
    type Output = State2;
    fn sub(self, o: State2) -> State2 {
        State2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<State2> for f64 {
    type Output = State2;
    fn mul(self, s: State2) -> State2 {
        State2::new(self * s.x, self * s.y)
    }
}

impl Neg for State2 {
    type Output = State2;
    fn neg(self) -> State2 {
        State2::new(-self.x, -self.y)
    }
}

impl From<[f64; 2]> for State2 {
    fn from(v: [f64; 2]) -> Self {
        State2::new(v[0], v[1])
    }
}

/// Coordinate chart of a [`State2`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chart {
    Original,
    Rescaled,
    #[serde(rename = "standard")]
    StandardForm,
}

impl fmt::Display for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Chart::Original => "original",
            Chart::Rescaled => "rescaled",
            Chart::StandardForm => "standard",
        })
    }
}

impl FromStr for Chart {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" => Ok(Chart::Original),
            "rescaled" => Ok(Chart::Rescaled),
            "standard" => Ok(Chart::StandardForm),
            other => Err(format!(
                "unknown chart '{other}' (expected original, rescaled or standard)"
            )),
        }
    }
}

impl Chart {
    /// Maps `state` at time `t` from `self` into `to`.
    ///
    /// Leaving the original chart divides by ε, so it fails at ε = 0.
    pub fn convert(
        self,
        to: Chart,
        t: f64,
        state: State2,
        params: &PendulumParams,
    ) -> Result<State2, OdeError> {
        if self == to {
            return Ok(state);
        }
        let eps = params.epsilon();
        let rescaled = match self {
            Chart::Rescaled => state,
            Chart::StandardForm => from_standard_form(t, state, params.a()),
            Chart::Original => {
                if eps == 0.0 {
                    return Err(OdeError::InvalidRequest(
                        "the original chart cannot be rescaled at epsilon = 0".into(),
                    ));
                }
                (1.0 / eps) * state
            }
        };
        Ok(match to {
            Chart::Rescaled => rescaled,
            Chart::StandardForm => to_standard_form(t, rescaled, params.a()),
            Chart::Original => eps * rescaled,
        })
    }
}

fn forcing_at(
    forcing: &dyn Forcing,
    t: f64,
    theta: f64,
    thetadot: f64,
) -> Result<f64, OdeError> {
    forcing
        .eval(t, theta, thetadot)
        .map_err(|e| OdeError::Evaluation {
            t,
            message: e.to_string(),
        })
}

/// `(θ̇, -a sin θ - εb̄ θ̇ + ε f(t,θ,θ̇) + ε² g(t,θ,θ̇))`.
pub fn pendulum_rhs(
    t: f64,
    s: State2,
    params: &PendulumParams,
    f: &dyn Forcing,
    g: &dyn Forcing,
) -> Result<State2, OdeError> {
    let eps = params.epsilon();
    let mut accel = -params.a() * s.x.sin() - params.damping() * s.y;
    if eps != 0.0 {
        accel += eps * forcing_at(f, t, s.x, s.y)? + eps * eps * forcing_at(g, t, s.x, s.y)?;
    }
    Ok(State2::new(s.y, accel))
}

/// `sin(u)/u`, by its Taylor series near zero.
pub fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        let u2 = u * u;
        1.0 - u2 / 6.0 + u2 * u2 / 120.0
    } else {
        u.sin() / u
    }
}

/// The pendulum in `θ = εφ` coordinates:
/// `(φ̇, -aφ·sinc(εφ) - εb̄φ̇ + f(t,εφ,εφ̇) + ε g(t,εφ,εφ̇))`.
///
/// At ε = 0 this is the linear center plus `f(t,0,0)`.
pub fn rescaled_rhs(
    t: f64,
    s: State2,
    params: &PendulumParams,
    f: &dyn Forcing,
    g: &dyn Forcing,
) -> Result<State2, OdeError> {
    let eps = params.epsilon();
    let (theta, thetadot) = (eps * s.x, eps * s.y);
    let mut accel = -params.a() * s.x * sinc(theta) - params.damping() * s.y
        + forcing_at(f, t, theta, thetadot)?;
    if eps != 0.0 {
        accel += eps * forcing_at(g, t, theta, thetadot)?;
    }
    Ok(State2::new(s.y, accel))
}

/// `e^{At}` for `A = [[0, 1], [-a, 0]]`.
pub fn fundamental_matrix(t: f64, a: f64) -> Matrix2<f64> {
    let w = a.sqrt();
    let (s, c) = (w * t).sin_cos();
    Matrix2::new(c, s / w, -w * s, c)
}

/// `y = e^{-At} x`.
pub fn to_standard_form(t: f64, x: State2, a: f64) -> State2 {
    State2::from_vector(fundamental_matrix(-t, a) * x.to_vector())
}

/// `x = e^{At} y`.
pub fn from_standard_form(t: f64, y: State2, a: f64) -> State2 {
    State2::from_vector(fundamental_matrix(t, a) * y.to_vector())
}

/// `e^{-At} (F(t, x) - A x)` at `x = e^{At} y`, where `F` is
/// [`rescaled_rhs`]. Integrating it reproduces `y(t) = e^{-At} x(t)`.
pub fn standard_form_rhs(
    t: f64,
    y: State2,
    params: &PendulumParams,
    f: &dyn Forcing,
    g: &dyn Forcing,
) -> Result<State2, OdeError> {
    let a = params.a();
    let x = from_standard_form(t, y, a);
    let field = rescaled_rhs(t, x, params, f, g)?;
    // A x = (x.y, -a x.x)
    let residual = State2::new(field.x - x.y, field.y + a * x.x);
    Ok(to_standard_form(t, residual, a))
}

/// The perturbed pendulum for one parameter set and profile.
#[derive(Debug, Clone, Copy)]
pub struct PendulumSystem<'a> {
    pub params: PendulumParams,
    pub profile: &'a PerturbationProfile,
}

impl<'a> PendulumSystem<'a> {
    pub fn new(params: PendulumParams, profile: &'a PerturbationProfile) -> Self {
        Self { params, profile }
    }

    pub fn rhs(&self, chart: Chart, t: f64, s: State2) -> Result<State2, OdeError> {
        let (f, g) = (self.profile.f(), self.profile.g());
        match chart {
            Chart::Original => pendulum_rhs(t, s, &self.params, f, g),
            Chart::Rescaled => rescaled_rhs(t, s, &self.params, f, g),
            Chart::StandardForm => standard_form_rhs(t, s, &self.params, f, g),
        }
    }

    pub fn integrate(
        &self,
        chart: Chart,
        s0: State2,
        t0: f64,
        t1: f64,
        opts: &IntegratorOptions,
    ) -> Result<Trajectory, OdeError> {
        integrate(|t, s| self.rhs(chart, t, s), s0, t0, t1, opts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Keep every accepted step; otherwise only the endpoints are stored.
    pub record: bool,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-10,
            max_steps: 1_000_000,
            record: true,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rel_tol: tol,
            abs_tol: tol,
            ..Self::default()
        }
    }

    pub fn endpoints_only(mut self) -> Self {
        self.record = false;
        self
    }
}

/// Time-stamped states of one integration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<(f64, State2)>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Largest scaled error norm over accepted steps (≤ 1).
    pub max_error_estimate: f64,
    pub rhs_evaluations: usize,
}

impl Trajectory {
    pub fn first(&self) -> (f64, State2) {
        self.samples[0]
    }

    pub fn last(&self) -> (f64, State2) {
        *self.samples.last().expect("trajectory has samples")
    }

    pub fn final_state(&self) -> State2 {
        self.last().1
    }

    /// CSV with header `t,x,y` and 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,x,y")?;
        for (t, s) in &self.samples {
            writeln!(out, "{},{},{}", fmt_f64(*t), fmt_f64(s.x), fmt_f64(s.y))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

fn error_norm(err: State2, y0: State2, y1: State2, opts: &IntegratorOptions) -> f64 {
    let sx = opts.abs_tol + opts.rel_tol * y0.x.abs().max(y1.x.abs());
    let sy = opts.abs_tol + opts.rel_tol * y0.y.abs().max(y1.y.abs());
    (((err.x / sx).powi(2) + (err.y / sy).powi(2)) / 2.0).sqrt()
}

/// One Dormand–Prince step of size `h` from `(t, s)` with `k1 = rhs(t, s)`.
/// Returns the fifth-order state at `t_new`, its derivative and the
/// embedded error estimate.
fn dopri_step<F>(
    eval: &mut F,
    traj: &mut Trajectory,
    t: f64,
    s: State2,
    k1: State2,
    h: f64,
    t_new: f64,
) -> Result<(State2, State2, State2), OdeError>
where
    F: FnMut(f64, State2, &mut Trajectory) -> Result<State2, OdeError>,
{
    let k2 = eval(t + C2 * h, s + (h * A21) * k1, traj)?;
    let k3 = eval(t + C3 * h, s + h * (A31 * k1 + A32 * k2), traj)?;
    let k4 = eval(t + C4 * h, s + h * (A41 * k1 + A42 * k2 + A43 * k3), traj)?;
    let k5 = eval(t + C5 * h, s + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4), traj)?;
    let k6 = eval(
        t + h,
        s + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5),
        traj,
    )?;
    let s_new = s + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6);
    let k7 = eval(t_new, s_new, traj)?;
    let err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
    Ok((s_new, k7, err))
}

fn counted<F>(mut rhs: F) -> impl FnMut(f64, State2, &mut Trajectory) -> Result<State2, OdeError>
where
    F: FnMut(f64, State2) -> Result<State2, OdeError>,
{
    move |t, s, traj| {
        traj.rhs_evaluations += 1;
        let d = rhs(t, s)?;
        if !d.is_finite() {
            return Err(OdeError::NonFiniteState { t });
        }
        Ok(d)
    }
}

/// Integrates with `steps` equal Dormand–Prince steps and no error control.
pub fn integrate_fixed<F>(rhs: F, s0: State2, t0: f64, t1: f64, steps: usize) -> Result<Trajectory, OdeError>
where
    F: FnMut(f64, State2) -> Result<State2, OdeError>,
{
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) || steps == 0 {
        return Err(OdeError::InvalidRequest(format!(
            "need finite t1 > t0 and at least one step, got [{t0}, {t1}] with {steps}"
        )));
    }
    if !s0.is_finite() {
        return Err(OdeError::NonFiniteState { t: t0 });
    }
    let mut eval = counted(rhs);
    let mut traj = Trajectory {
        samples: vec![(t0, s0)],
        ..Trajectory::default()
    };
    let h = (t1 - t0) / steps as f64;
    let mut s = s0;
    let mut k1 = eval(t0, s, &mut traj)?;
    for i in 0..steps {
        let t = t0 + i as f64 * h;
        let t_new = if i + 1 == steps { t1 } else { t0 + (i + 1) as f64 * h };
        let (s_new, k7, _) = dopri_step(&mut eval, &mut traj, t, s, k1, t_new - t, t_new)?;
        s = s_new;
        k1 = k7;
        traj.accepted_steps += 1;
        traj.samples.push((t_new, s));
    }
    Ok(traj)
}

/// Integrates `s' = rhs(t, s)` from `t0` to `t1` with the Dormand–Prince
/// 5(4) pair. Each accepted step satisfies the scaled local error test
/// `‖e_i / (abs_tol + rel_tol·|s_i|)‖_rms ≤ 1`. The last sample is exactly
/// at `t1`.
pub fn integrate<F>(
    rhs: F,
    s0: State2,
    t0: f64,
    t1: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory, OdeError>
where
    F: FnMut(f64, State2) -> Result<State2, OdeError>,
{
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(OdeError::InvalidRequest(format!(
            "need finite t1 > t0, got [{t0}, {t1}]"
        )));
    }
    if !(opts.rel_tol > 0.0 && opts.abs_tol > 0.0) {
        return Err(OdeError::InvalidRequest("tolerances must be positive".into()));
    }
    if !s0.is_finite() {
        return Err(OdeError::NonFiniteState { t: t0 });
    }

    let span = t1 - t0;
    let min_step = 1e-14 * span;
    let mut traj = Trajectory {
        samples: vec![(t0, s0)],
        ..Trajectory::default()
    };
    let mut eval = counted(rhs);

    let mut t = t0;
    let mut s = s0;
    let mut k1 = eval(t, s, &mut traj)?;
    let mut h = initial_step(&mut eval, t, s, k1, span, opts, &mut traj)?;
    let mut last_rejected = false;

    loop {
        if traj.accepted_steps + traj.rejected_steps >= opts.max_steps {
            return Err(OdeError::TooManySteps {
                max_steps: opts.max_steps,
                t1,
            });
        }
        // Fold a sliver of remaining time into this step.
        let last = t + h * 1.0001 >= t1;
        if last {
            h = t1 - t;
        }

        let t_new = if last { t1 } else { t + h };
        let (s_new, k7, err_vec) = dopri_step(&mut eval, &mut traj, t, s, k1, h, t_new)?;
        let err = error_norm(err_vec, s, s_new, opts);

        if err <= 1.0 {
            traj.accepted_steps += 1;
            traj.max_error_estimate = traj.max_error_estimate.max(err);
            t = t_new;
            s = s_new;
            k1 = k7;
            if opts.record || last {
                traj.samples.push((t, s));
            }
            if last {
                return Ok(traj);
            }
            let mut factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            if last_rejected {
                factor = factor.min(1.0);
            }
            h *= factor;
            last_rejected = false;
        } else {
            traj.rejected_steps += 1;
            h *= (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
            last_rejected = true;
            if !err.is_finite() {
                h = h.min(0.1 * (t1 - t));
            }
        }
        if h < min_step {
            return Err(OdeError::StepUnderflow { t, h });
        }
    }
}

/// Starting step from the derivative scales at `t0`.
fn initial_step<F>(
    eval: &mut F,
    t: f64,
    s: State2,
    k1: State2,
    span: f64,
    opts: &IntegratorOptions,
    traj: &mut Trajectory,
) -> Result<f64, OdeError>
where
    F: FnMut(f64, State2, &mut Trajectory) -> Result<State2, OdeError>,
{
    let scale = |v: f64| opts.abs_tol + opts.rel_tol * v.abs();
    let rms = |a: State2, b: State2| {
        (((a.x / scale(b.x)).powi(2) + (a.y / scale(b.y)).powi(2)) / 2.0).sqrt()
    };
    let d0 = rms(s, s);
    let d1 = rms(k1, s);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(span);
    let k = eval(t + h0, s + h0 * k1, traj)?;
    let d2 = rms(k - k1, s) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(span))
}
