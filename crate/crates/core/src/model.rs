//! Pendulum parameters, equilibrium classification, period bookkeeping and
//! the Taylor coefficients `g0`, `f1`, `f2` of a perturbation at the origin.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{EvalError, Expr};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("periods have different base frequencies ({0} vs {1})")]
    InconsistentBase(f64, f64),
    #[error("evaluation failed at t = {t}: {message}")]
    Evaluation { t: f64, message: String },
}

/// Physical and perturbation scalars. The damping is always `epsilon * b_bar`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumParams {
    a: f64,
    b_bar: f64,
    epsilon: f64,
}

impl PendulumParams {
    pub fn new(a: f64, b_bar: f64, epsilon: f64) -> Result<Self, ModelError> {
        if !(a.is_finite() && a > 0.0) {
            return Err(ModelError::InvalidParameter(format!("a must be positive, got {a}")));
        }
        if !b_bar.is_finite() {
            return Err(ModelError::InvalidParameter(format!("b_bar must be finite, got {b_bar}")));
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(ModelError::InvalidParameter(format!(
                "epsilon must be nonnegative, got {epsilon}"
            )));
        }
        if epsilon > 0.0 && b_bar <= 0.0 {
            return Err(ModelError::InvalidParameter(format!(
                "b_bar must be positive when epsilon > 0, got {b_bar}"
            )));
        }
        Ok(Self { a, b_bar, epsilon })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b_bar(&self) -> f64 {
        self.b_bar
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sqrt_a(&self) -> f64 {
        self.a.sqrt()
    }

    /// Physical damping `b = epsilon * b_bar`.
    pub fn damping(&self) -> f64 {
        self.epsilon * self.b_bar
    }

    /// Period `2π/√a` of the unperturbed linear center.
    pub fn base_period(&self) -> f64 {
        2.0 * PI / self.sqrt_a()
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self, ModelError> {
        Self::new(self.a, self.b_bar, epsilon)
    }
}

/// Roots of `λ² + bλ + a = 0`.
pub fn eigenvalues(a: f64, b: f64) -> (Complex64, Complex64) {
    let disc = b * b - 4.0 * a;
    let root = if disc >= 0.0 {
        Complex64::new(disc.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-disc).sqrt())
    };
    let minus_b = Complex64::new(-b, 0.0);
    ((minus_b + root) / 2.0, (minus_b - root) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    AttractorNode,
    AttractorFocus,
    Center,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::AttractorNode => "attractor node",
            Classification::AttractorFocus => "attractor focus",
            Classification::Center => "center",
        })
    }
}

/// Type of the origin for the linearization `θ̈ = -aθ - bθ̇` with `a > 0, b ≥ 0`.
pub fn classify_equilibrium(a: f64, b: f64) -> Classification {
    if b == 0.0 {
        Classification::Center
    } else if b * b >= 4.0 * a {
        Classification::AttractorNode
    } else {
        Classification::AttractorFocus
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

fn lcm(a: u64, b: u64) -> Option<u64> {
    (a / gcd(a, b)).checked_mul(b)
}

/// A period `(p/q) · 2π/√a` carried as an exact reduced fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RationalPeriod {
    p: u64,
    q: u64,
    base: f64,
}

impl RationalPeriod {
    /// Builds `(p/q)·2π/√a`, reducing the fraction.
    pub fn new(p: u64, q: u64, a: f64) -> Result<Self, ModelError> {
        if !(a.is_finite() && a > 0.0) {
            return Err(ModelError::InvalidParameter(format!("a must be positive, got {a}")));
        }
        Self::with_base(p, q, 2.0 * PI / a.sqrt())
    }

    pub fn with_base(p: u64, q: u64, base: f64) -> Result<Self, ModelError> {
        if p == 0 || q == 0 {
            return Err(ModelError::InvalidParameter(format!(
                "period numerator and denominator must be positive, got {p}/{q}"
            )));
        }
        if !(base.is_finite() && base > 0.0) {
            return Err(ModelError::InvalidParameter(format!("base period must be positive, got {base}")));
        }
        let d = gcd(p, q);
        Ok(Self {
            p: p / d,
            q: q / d,
            base,
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn value(&self) -> f64 {
        self.p as f64 / self.q as f64 * self.base
    }
}

/// Least common period `T = 2pπ/√a` with `p = lcm(p_f, p_g)`.
pub fn common_period(
    period_f: RationalPeriod,
    period_g: RationalPeriod,
) -> Result<(u64, f64), ModelError> {
    let (bf, bg) = (period_f.base, period_g.base);
    if (bf - bg).abs() > 1e-12 * bf.max(bg) {
        return Err(ModelError::InconsistentBase(bf, bg));
    }
    let p = lcm(period_f.p, period_g.p)
        .ok_or_else(|| ModelError::InvalidParameter("period numerators overflow".into()))?;
    Ok((p, p as f64 * bf))
}

/// A perturbation term `(t, θ, θ̇) ↦ value`.
pub trait Forcing: Send + Sync {
    fn eval(&self, t: f64, theta: f64, thetadot: f64) -> Result<f64, EvalError>;
}

impl Forcing for Expr {
    fn eval(&self, t: f64, theta: f64, thetadot: f64) -> Result<f64, EvalError> {
        Expr::eval(self, t, theta, thetadot)
    }
}

impl<F> Forcing for F
where
    F: Fn(f64, f64, f64) -> f64 + Send + Sync,
{
    fn eval(&self, t: f64, theta: f64, thetadot: f64) -> Result<f64, EvalError> {
        let value = self(t, theta, thetadot);
        if value.is_finite() {
            Ok(value)
        } else {
            Err(EvalError {
                expr: "<closure>".into(),
                reason: "non-finite result".into(),
            })
        }
    }
}

/// A periodic coefficient function of time.
pub type Coefficient = Arc<dyn Fn(f64) -> Result<f64, ModelError> + Send + Sync>;

pub fn coefficient<F>(func: F) -> Coefficient
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    Arc::new(move |t| {
        let v = func(t);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ModelError::Evaluation {
                t,
                message: "non-finite coefficient".into(),
            })
        }
    })
}

/// Coefficient defined by an expression in `t` alone (θ = θ̇ = 0).
pub fn expr_coefficient(expr: Expr) -> Coefficient {
    Arc::new(move |t| {
        expr.eval(t, 0.0, 0.0).map_err(|e| ModelError::Evaluation {
            t,
            message: e.to_string(),
        })
    })
}

/// Default central-difference step in `θ` and `θ̇`: `ε_mach^{1/3}`.
pub fn default_fd_step() -> f64 {
    f64::EPSILON.cbrt()
}

fn eval_at(forcing: &dyn Forcing, t: f64, theta: f64, thetadot: f64) -> Result<f64, ModelError> {
    match forcing.eval(t, theta, thetadot) {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(v) => Err(ModelError::Evaluation {
            t,
            message: format!("non-finite value {v}"),
        }),
        Err(e) => Err(ModelError::Evaluation {
            t,
            message: e.to_string(),
        }),
    }
}

/// Extracts `g0(t) = g(t,0,0)`, `f1(t) ≈ ∂f/∂θ(t,0,0)` and
/// `f2(t) ≈ ∂f/∂θ̇(t,0,0)` by central differences. `step = None` uses
/// [`default_fd_step`].
pub fn extract_coefficients(
    f: Arc<dyn Forcing>,
    g: Arc<dyn Forcing>,
    step: Option<f64>,
) -> (Coefficient, Coefficient, Coefficient) {
    let h = step.unwrap_or_else(default_fd_step);
    let g0: Coefficient = Arc::new(move |t| eval_at(g.as_ref(), t, 0.0, 0.0));
    let f_theta = Arc::clone(&f);
    let f1: Coefficient = Arc::new(move |t| {
        let plus = eval_at(f_theta.as_ref(), t, h, 0.0)?;
        let minus = eval_at(f_theta.as_ref(), t, -h, 0.0)?;
        Ok((plus - minus) / (2.0 * h))
    });
    let f2: Coefficient = Arc::new(move |t| {
        let plus = eval_at(f.as_ref(), t, 0.0, h)?;
        let minus = eval_at(f.as_ref(), t, 0.0, -h)?;
        Ok((plus - minus) / (2.0 * h))
    });
    (g0, f1, f2)
}

/// The perturbation `(f, g)` together with its Taylor coefficients at the
/// origin and the common period `T`.
#[derive(Clone)]
pub struct PerturbationProfile {
    f: Arc<dyn Forcing>,
    g: Arc<dyn Forcing>,
    g0: Coefficient,
    f1: Coefficient,
    f2: Coefficient,
    period_f: RationalPeriod,
    period_g: RationalPeriod,
    p: u64,
    period: f64,
}

impl fmt::Debug for PerturbationProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PerturbationProfile")
            .field("period_f", &self.period_f)
            .field("period_g", &self.period_g)
            .field("p", &self.p)
            .field("period", &self.period)
            .finish_non_exhaustive()
    }
}

impl PerturbationProfile {
    /// Builds a profile with finite-difference coefficients.
    pub fn new(
        f: Arc<dyn Forcing>,
        g: Arc<dyn Forcing>,
        period_f: RationalPeriod,
        period_g: RationalPeriod,
    ) -> Result<Self, ModelError> {
        let (p, period) = common_period(period_f, period_g)?;
        let (g0, f1, f2) = extract_coefficients(Arc::clone(&f), Arc::clone(&g), None);
        Ok(Self {
            f,
            g,
            g0,
            f1,
            f2,
            period_f,
            period_g,
            p,
            period,
        })
    }

    /// Profile whose `f` and `g` both have the base period `2π/√a`.
    pub fn with_base_period(
        a: f64,
        f: Arc<dyn Forcing>,
        g: Arc<dyn Forcing>,
    ) -> Result<Self, ModelError> {
        let base = RationalPeriod::new(1, 1, a)?;
        Self::new(f, g, base, base)
    }

    /// Replaces the finite-difference `f1` with an analytic one.
    pub fn with_f1(mut self, f1: Coefficient) -> Self {
        self.f1 = f1;
        self
    }

    pub fn with_f2(mut self, f2: Coefficient) -> Self {
        self.f2 = f2;
        self
    }

    pub fn with_g0(mut self, g0: Coefficient) -> Self {
        self.g0 = g0;
        self
    }

    pub fn f(&self) -> &dyn Forcing {
        self.f.as_ref()
    }

    pub fn g(&self) -> &dyn Forcing {
        self.g.as_ref()
    }

    pub fn g0(&self, t: f64) -> Result<f64, ModelError> {
        (self.g0)(t)
    }

    pub fn f1(&self, t: f64) -> Result<f64, ModelError> {
        (self.f1)(t)
    }

    pub fn f2(&self, t: f64) -> Result<f64, ModelError> {
        (self.f2)(t)
    }

    pub fn period_f(&self) -> RationalPeriod {
        self.period_f
    }

    pub fn period_g(&self) -> RationalPeriod {
        self.period_g
    }

    /// Multiplier `p` in `T = 2pπ/√a`.
    pub fn p(&self) -> u64 {
        self.p
    }

    /// Common period `T`.
    pub fn period(&self) -> f64 {
        self.period
    }

    /// Largest `|f(t,0,0)|` over `samples` equispaced points of `[0, T)`.
    pub fn max_f_at_origin(&self, samples: usize) -> Result<f64, ModelError> {
        let mut worst = 0.0f64;
        for k in 0..samples {
            let t = self.period * k as f64 / samples as f64;
            worst = worst.max(eval_at(self.f.as_ref(), t, 0.0, 0.0)?.abs());
        }
        Ok(worst)
    }

    /// Largest `|c(t+T) - c(t)|` over `g0, f1, f2` at `samples` grid points.
    pub fn max_periodicity_defect(&self, samples: usize) -> Result<f64, ModelError> {
        let mut worst = 0.0f64;
        for k in 0..samples {
            let t = self.period * k as f64 / samples as f64;
            for c in [&self.g0, &self.f1, &self.f2] {
                worst = worst.max((c(t + self.period)? - c(t)?).abs());
            }
        }
        Ok(worst)
    }
}
