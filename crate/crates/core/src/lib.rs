//! Periodic orbits of the perturbed damped pendulum
//!
//! ```text
//! θ̈ = -a sin θ - εb̄ θ̇ + ε f(t, θ, θ̇) + ε² g(t, θ, θ̇)
//! ```
//!
//! by first-order averaging, verified by Newton shooting on the full
//! equation.
//!
//! - [`model`]: parameters, equilibrium type, periods, Taylor coefficients.
//! - [`expr`]: the expression language for `f` and `g`.
//! - [`averaging`]: the averaged system `Mζ = v` and existence conditions.
//! - [`ode`]: right-hand sides in three charts and the integrator.
//! - [`shooting`]: periodic orbits, Floquet multipliers, ε-sweeps.
//! - [`cli`]: the `avg-orbit` command line.

pub mod averaging;
pub mod cli;
pub mod expr;
pub mod model;
pub mod newton;
pub mod ode;
pub mod quadrature;
pub mod shooting;
