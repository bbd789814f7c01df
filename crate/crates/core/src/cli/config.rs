//! JSON problem configuration.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse, Expr, ParseError};
use crate::model::{expr_coefficient, ModelError, PendulumParams, PerturbationProfile, RationalPeriod};
use crate::newton::NewtonOptions;
use crate::ode::IntegratorOptions;
use crate::quadrature::QuadratureOptions;
use crate::shooting::ShootingOptions;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("field \"{field}\": {error} at offset {offset} in {source_text:?}", offset = error.offset)]
    Dsl {
        field: &'static str,
        source_text: String,
        error: ParseError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn one() -> u64 {
    1
}

fn yes() -> bool {
    true
}

/// A problem instance as read from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub a: f64,
    pub b_bar: f64,
    pub epsilon: f64,
    pub f: String,
    pub g: String,
    #[serde(default = "one")]
    pub p_f: u64,
    #[serde(default = "one")]
    pub q_f: u64,
    #[serde(default = "one")]
    pub p_g: u64,
    #[serde(default = "one")]
    pub q_g: u64,
    /// Analytic `∂f/∂θ(t,0,0)`, in `t` only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<String>,
    /// Analytic `∂f/∂θ̇(t,0,0)`, in `t` only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f2: Option<String>,
    /// Analytic `g(t,0,0)`, in `t` only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g0: Option<String>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Absolute tolerance of the averaging integrals.
    pub quadrature: f64,
    /// Relative and absolute tolerance of the ODE integrator.
    pub integrator: f64,
    /// Residual tolerance of Newton iterations.
    pub newton: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quadrature: 1e-10,
            integrator: 1e-10,
            newton: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub epsilons: Vec<f64>,
    #[serde(default = "yes")]
    pub warm_start: bool,
}

/// Everything the pipelines need, built from a validated config.
#[derive(Debug, Clone)]
pub struct Problem {
    pub config: ProblemConfig,
    pub params: PendulumParams,
    pub profile: PerturbationProfile,
}

fn parse_field(field: &'static str, src: &str) -> Result<Expr, ConfigError> {
    parse(src).map_err(|error| ConfigError::Dsl {
        field,
        source_text: src.to_string(),
        error,
    })
}

fn positive(name: &str, x: f64) -> Result<(), ConfigError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("{name} must be a positive real, got {x}")))
    }
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn quadrature_options(&self) -> QuadratureOptions {
        QuadratureOptions::with_abs_tol(self.tolerances.quadrature)
    }

    pub fn integrator_options(&self) -> IntegratorOptions {
        IntegratorOptions::with_tol(self.tolerances.integrator)
    }

    pub fn newton_options(&self) -> NewtonOptions {
        NewtonOptions {
            tol: self.tolerances.newton,
            ..NewtonOptions::default()
        }
    }

    pub fn shooting_options(&self) -> ShootingOptions {
        let base = ShootingOptions::default();
        ShootingOptions {
            integrator: self.integrator_options().endpoints_only(),
            newton: NewtonOptions {
                tol: self.tolerances.newton,
                ..base.newton
            },
        }
    }

    /// The sweep ε list: at least three, positive, strictly decreasing.
    pub fn sweep_epsilons(&self) -> Result<&[f64], ConfigError> {
        let sweep = self
            .sweep
            .as_ref()
            .ok_or_else(|| ConfigError::Invalid("missing \"sweep\" block".into()))?;
        let eps = &sweep.epsilons;
        if eps.len() < 3 {
            return Err(ConfigError::Invalid(format!(
                "sweep needs at least 3 epsilons, got {}",
                eps.len()
            )));
        }
        for &e in eps {
            positive("sweep epsilon", e)?;
        }
        if eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(ConfigError::Invalid("sweep epsilons must be strictly decreasing".into()));
        }
        Ok(eps)
    }

    /// Parses every DSL field and builds the parameters and profile.
    pub fn build(&self) -> Result<Problem, ConfigError> {
        positive("a", self.a)?;
        positive("tolerances.quadrature", self.tolerances.quadrature)?;
        positive("tolerances.integrator", self.tolerances.integrator)?;
        positive("tolerances.newton", self.tolerances.newton)?;
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return Err(ConfigError::Invalid(format!(
                "epsilon must be a non-negative real, got {}",
                self.epsilon
            )));
        }
        let params = PendulumParams::new(self.a, self.b_bar, self.epsilon)?;
        let f = parse_field("f", &self.f)?;
        let g = parse_field("g", &self.g)?;
        let period_f = RationalPeriod::new(self.p_f, self.q_f, self.a)?;
        let period_g = RationalPeriod::new(self.p_g, self.q_g, self.a)?;
        let mut profile = PerturbationProfile::new(Arc::new(f), Arc::new(g), period_f, period_g)?;
        for (field, src) in [("f1", &self.f1), ("f2", &self.f2), ("g0", &self.g0)] {
            let Some(src) = src else { continue };
            let expr = parse_field(field, src)?;
            if expr.uses(crate::expr::Var::Theta) || expr.uses(crate::expr::Var::ThetaDot) {
                return Err(ConfigError::Invalid(format!("{field} may only depend on t")));
            }
            let c = expr_coefficient(expr);
            profile = match field {
                "f1" => profile.with_f1(c),
                "f2" => profile.with_f2(c),
                _ => profile.with_g0(c),
            };
        }
        Ok(Problem {
            config: self.clone(),
            params,
            profile,
        })
    }
}
