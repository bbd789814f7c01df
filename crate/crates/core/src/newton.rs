//! Damped Newton iteration with a forward-difference Jacobian, shared by the
//! averaged-field zero finder and the shooting solver.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NewtonError {
    #[error("no convergence in {iterations} iterations (residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("singular Jacobian at iteration {iteration} (smallest singular value {sigma_min:e})")]
    SingularJacobian { iteration: usize, sigma_min: f64 },
    #[error("line search failed to reduce residual {residual:e} at iteration {iteration}")]
    Stagnation { iteration: usize, residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Converged when `‖f(x)‖₂ ≤ tol`.
    pub tol: f64,
    pub max_iterations: usize,
    /// Step halvings tried before giving up on a direction.
    pub max_halvings: usize,
    /// Difference step for coordinate `x_i` is `fd_scale·(1+|x_i|)`.
    pub fd_scale: f64,
    /// The Jacobian is singular when
    /// `σ_min ≤ singular_abs + singular_rel·σ_max`.
    pub singular_abs: f64,
    pub singular_rel: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iterations: 50,
            max_halvings: 20,
            fd_scale: f64::EPSILON.sqrt(),
            singular_abs: 1e-12,
            singular_rel: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonSolution {
    pub x: DVector<f64>,
    pub fx: DVector<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Forward-difference Jacobian of `f` at `x`, given `fx = f(x)`.
pub fn fd_jacobian<E, F>(
    f: &mut F,
    x: &DVector<f64>,
    fx: &DVector<f64>,
    fd_scale: f64,
) -> Result<DMatrix<f64>, E>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>, E>,
{
    let n = x.len();
    let mut jac = DMatrix::zeros(fx.len(), n);
    for j in 0..n {
        let h = fd_scale * (1.0 + x[j].abs());
        let mut xp = x.clone();
        xp[j] += h;
        // the step actually taken after rounding
        let h = xp[j] - x[j];
        let fp = f(&xp)?;
        jac.set_column(j, &((fp - fx) / h));
    }
    Ok(jac)
}

fn singular_values(jac: &DMatrix<f64>) -> (f64, f64) {
    let sv = jac.clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    (min, max)
}

/// Returns true when `jac` counts as singular under `opts`.
pub fn is_singular(jac: &DMatrix<f64>, opts: &NewtonOptions) -> (bool, f64) {
    let (min, max) = singular_values(jac);
    (min <= opts.singular_abs + opts.singular_rel * max, min)
}

/// Solves `f(x) = 0` from `x0`. Each Newton step is halved up to
/// `max_halvings` times until the residual norm decreases.
pub fn solve<E, F>(mut f: F, x0: DVector<f64>, opts: &NewtonOptions) -> Result<NewtonSolution, E>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>, E>,
    E: From<NewtonError>,
{
    let mut x = x0;
    let mut fx = f(&x)?;
    let mut residual = fx.norm();
    for iteration in 0..opts.max_iterations {
        if residual <= opts.tol {
            return Ok(NewtonSolution {
                x,
                fx,
                residual,
                iterations: iteration,
            });
        }
        let jac = fd_jacobian(&mut f, &x, &fx, opts.fd_scale)?;
        let (singular, sigma_min) = is_singular(&jac, opts);
        if singular {
            return Err(NewtonError::SingularJacobian {
                iteration,
                sigma_min,
            }
            .into());
        }
        let step = jac.lu().solve(&(-&fx)).ok_or(NewtonError::SingularJacobian {
            iteration,
            sigma_min,
        })?;

        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let trial = &x + &step * scale;
            let f_trial = f(&trial)?;
            let r_trial = f_trial.norm();
            if r_trial < residual {
                x = trial;
                fx = f_trial;
                residual = r_trial;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            return Err(NewtonError::Stagnation {
                iteration,
                residual,
            }
            .into());
        }
    }
    if residual <= opts.tol {
        return Ok(NewtonSolution {
            x,
            fx,
            residual,
            iterations: opts.max_iterations,
        });
    }
    Err(NewtonError::MaxIterations {
        iterations: opts.max_iterations,
        residual,
    }
    .into())
}
