//! Periodic orbits of the full pendulum by Newton shooting on the time-T
//! (stroboscopic) map, Floquet multipliers of the result, and ε-sweeps
//! checking that the rescaled fixed point tends to the averaging prediction.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use thiserror::Error;

use crate::model::{ModelError, PendulumParams, PerturbationProfile};
use crate::newton::{self, NewtonError, NewtonOptions};
use crate::ode::{fmt_f64, Chart, IntegratorOptions, OdeError, PendulumSystem, State2, Trajectory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShootingError {
    #[error(transparent)]
    Integration(#[from] OdeError),
    #[error(transparent)]
    Newton(#[from] NewtonError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("only {succeeded} of {total} sweep rows converged; at least 3 are needed")]
    InsufficientRows { succeeded: usize, total: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOptions {
    pub integrator: IntegratorOptions,
    pub newton: NewtonOptions,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            integrator: IntegratorOptions::default().endpoints_only(),
            newton: NewtonOptions {
                fd_scale: 1e-6,
                // G = P - I has entries of order ε near a hyperbolic orbit;
                // at ε = 0 they drop to integrator noise.
                singular_abs: 1e-6,
                singular_rel: 1e-8,
                ..NewtonOptions::default()
            },
        }
    }
}

/// Integrates the chosen chart over `[0, T]` and returns the endpoint.
pub fn stroboscopic_map(
    s0: State2,
    params: &PendulumParams,
    profile: &PerturbationProfile,
    chart: Chart,
    integrator: &IntegratorOptions,
) -> Result<State2, OdeError> {
    let opts = integrator.endpoints_only();
    let traj = PendulumSystem::new(*params, profile).integrate(chart, s0, 0.0, profile.period(), &opts)?;
    Ok(traj.final_state())
}

/// Forward-difference Jacobian of the stroboscopic map at `s`, with step
/// `fd_scale·(1+|s_i|)`.
pub fn monodromy(
    s: State2,
    params: &PendulumParams,
    profile: &PerturbationProfile,
    chart: Chart,
    integrator: &IntegratorOptions,
    fd_scale: f64,
) -> Result<Matrix2<f64>, OdeError> {
    let mut map = |v: &DVector<f64>| -> Result<DVector<f64>, OdeError> {
        let out = stroboscopic_map(State2::new(v[0], v[1]), params, profile, chart, integrator)?;
        Ok(DVector::from_row_slice(&[out.x, out.y]))
    };
    let x = DVector::from_row_slice(&[s.x, s.y]);
    let fx = map(&x)?;
    let jac = newton::fd_jacobian(&mut map, &x, &fx, fd_scale)?;
    Ok(Matrix2::new(jac[(0, 0)], jac[(0, 1)], jac[(1, 0)], jac[(1, 1)]))
}

/// Eigenvalues of a 2×2 matrix from its characteristic polynomial
/// `λ² - tr·λ + det`.
pub fn floquet_multipliers(m: &Matrix2<f64>) -> [Complex64; 2] {
    let tr = m.trace();
    let det = m.determinant();
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let r = disc.sqrt();
        // avoid cancellation in the smaller root
        let big = 0.5 * (tr + r.copysign(tr));
        let small = if big != 0.0 { det / big } else { 0.5 * (tr - r.copysign(tr)) };
        [Complex64::new(big, 0.0), Complex64::new(small, 0.0)]
    } else {
        let im = 0.5 * (-disc).sqrt();
        [Complex64::new(0.5 * tr, im), Complex64::new(0.5 * tr, -im)]
    }
}

/// A fixed point of the time-T map and its stability.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    pub epsilon: f64,
    pub chart: Chart,
    /// Initial condition of the periodic solution in `chart`.
    pub x0: State2,
    pub period: f64,
    /// `‖P(x0) - x0‖`.
    pub residual: f64,
    pub iterations: usize,
    pub monodromy: Matrix2<f64>,
    pub floquet: [Complex64; 2],
    /// One period of the orbit, at the integrator's accepted steps.
    pub orbit_samples: Trajectory,
}

impl PeriodicOrbit {
    /// Both multipliers strictly inside the unit circle.
    pub fn is_attracting(&self) -> bool {
        self.floquet.iter().all(|m| m.norm() < 1.0)
    }

    /// `x0` mapped into another chart.
    pub fn x0_in(&self, chart: Chart, params: &PendulumParams) -> Result<State2, OdeError> {
        self.chart.convert(chart, 0.0, self.x0, params)
    }
}

/// Newton shooting on `G(s) = P(s) - s` from `seed`.
///
/// At ε = 0 the rescaled and standard-form maps are the identity and the
/// Jacobian of `G` vanishes, which surfaces as
/// [`NewtonError::SingularJacobian`].
pub fn find_periodic(
    params: &PendulumParams,
    profile: &PerturbationProfile,
    chart: Chart,
    seed: State2,
    opts: &ShootingOptions,
) -> Result<PeriodicOrbit, ShootingError> {
    if !seed.is_finite() {
        return Err(ShootingError::Invalid("seed must be finite".into()));
    }
    let residual_map = |v: &DVector<f64>| -> Result<DVector<f64>, ShootingError> {
        let s = State2::new(v[0], v[1]);
        let out = stroboscopic_map(s, params, profile, chart, &opts.integrator)?;
        Ok(DVector::from_row_slice(&[out.x - s.x, out.y - s.y]))
    };
    let sol = newton::solve(
        residual_map,
        DVector::from_row_slice(&[seed.x, seed.y]),
        &opts.newton,
    )?;
    let x0 = State2::new(sol.x[0], sol.x[1]);
    let monodromy = monodromy(x0, params, profile, chart, &opts.integrator, opts.newton.fd_scale)?;
    let floquet = floquet_multipliers(&monodromy);
    let record = IntegratorOptions {
        record: true,
        ..opts.integrator
    };
    let orbit_samples =
        PendulumSystem::new(*params, profile).integrate(chart, x0, 0.0, profile.period(), &record)?;
    Ok(PeriodicOrbit {
        epsilon: params.epsilon(),
        chart,
        x0,
        period: profile.period(),
        residual: sol.residual,
        iterations: sol.iterations,
        monodromy,
        floquet,
        orbit_samples,
    })
}

/// One ε of a convergence sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    /// Rescaled-chart fixed point, when shooting converged.
    pub x0: Option<State2>,
    /// `‖x0 - z0‖` in the rescaled chart.
    pub distance: Option<f64>,
    pub residual: Option<f64>,
    pub iterations: Option<usize>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn converged(&self) -> bool {
        self.x0.is_some()
    }

    /// `ε·x0`, the initial condition in the original `(θ, θ̇)` chart.
    pub fn original_x0(&self) -> Option<State2> {
        self.x0.map(|x| self.epsilon * x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub z0: State2,
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `log(distance)` against `log(ε)` over
    /// converged rows.
    pub fitted_slope: f64,
}

impl ConvergenceReport {
    pub fn successful(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.converged())
    }

    /// Distances strictly decrease along the (decreasing) ε sequence.
    pub fn distances_monotone(&self) -> bool {
        let d: Vec<f64> = self.successful().filter_map(|r| r.distance).collect();
        d.windows(2).all(|w| w[1] < w[0])
    }

    /// Largest ε at which shooting converged.
    pub fn largest_converged_epsilon(&self) -> Option<f64> {
        self.successful().map(|r| r.epsilon).reduce(f64::max)
    }

    /// CSV with header `epsilon,x0_1,x0_2,dist,residual,converged`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "epsilon,x0_1,x0_2,dist,residual,converged")?;
        for row in &self.rows {
            let x0 = row.x0.unwrap_or(State2::new(f64::NAN, f64::NAN));
            writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_f64(row.epsilon),
                fmt_f64(x0.x),
                fmt_f64(x0.y),
                fmt_f64(row.distance.unwrap_or(f64::NAN)),
                fmt_f64(row.residual.unwrap_or(f64::NAN)),
                row.converged()
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub shooting: ShootingOptions,
    /// Seed each ε from the previous converged fixed point.
    pub warm_start: bool,
    /// Worker threads; only used when `warm_start` is off.
    pub jobs: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            shooting: ShootingOptions::default(),
            warm_start: true,
            jobs: 1,
        }
    }
}

fn sweep_row(
    params: &PendulumParams,
    profile: &PerturbationProfile,
    epsilon: f64,
    seed: State2,
    z0: State2,
    opts: &ShootingOptions,
) -> SweepRow {
    let result = params
        .with_epsilon(epsilon)
        .map_err(ShootingError::from)
        .and_then(|p| find_periodic(&p, profile, Chart::Rescaled, seed, opts));
    match result {
        Ok(orbit) => SweepRow {
            epsilon,
            x0: Some(orbit.x0),
            distance: Some((orbit.x0 - z0).norm()),
            residual: Some(orbit.residual),
            iterations: Some(orbit.iterations),
            error: None,
        },
        Err(e) => SweepRow {
            epsilon,
            x0: None,
            distance: None,
            residual: None,
            iterations: None,
            error: Some(e.to_string()),
        },
    }
}

/// Shoots for the periodic orbit at each ε (strictly decreasing, positive)
/// from the averaging seed `z0` and fits the rate at which the rescaled fixed
/// point approaches `z0`.
pub fn convergence_study(
    params: &PendulumParams,
    profile: &PerturbationProfile,
    epsilons: &[f64],
    z0: State2,
    opts: &SweepOptions,
) -> Result<ConvergenceReport, ShootingError> {
    if epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(ShootingError::Invalid("sweep epsilons must be positive".into()));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ShootingError::Invalid("sweep epsilons must be strictly decreasing".into()));
    }

    let rows: Vec<SweepRow> = if opts.warm_start || opts.jobs <= 1 {
        let mut seed = z0;
        let mut rows = Vec::with_capacity(epsilons.len());
        for &eps in epsilons {
            let row = sweep_row(params, profile, eps, seed, z0, &opts.shooting);
            if opts.warm_start {
                if let Some(x0) = row.x0 {
                    seed = x0;
                }
            }
            rows.push(row);
        }
        rows
    } else {
        let chunk = epsilons.len().div_ceil(opts.jobs);
        std::thread::scope(|scope| {
            let handles: Vec<_> = epsilons
                .chunks(chunk)
                .map(|eps_chunk| {
                    scope.spawn(move || {
                        eps_chunk
                            .iter()
                            .map(|&eps| sweep_row(params, profile, eps, z0, z0, &opts.shooting))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("sweep worker panicked"))
                .collect()
        })
    };

    let (log_eps, log_dist): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter_map(|r| r.distance.map(|d| (r.epsilon.ln(), d.ln())))
        .unzip();
    if log_eps.len() < 3 {
        return Err(ShootingError::InsufficientRows {
            succeeded: log_eps.len(),
            total: rows.len(),
        });
    }
    let fitted_slope = fit_slope(&log_eps, &log_dist);
    Ok(ConvergenceReport {
        z0,
        rows,
        fitted_slope,
    })
}

/// Shooting Jacobian of `G = P - I` in the rescaled chart, for diagnostics.
pub fn shooting_jacobian(
    params: &PendulumParams,
    profile: &PerturbationProfile,
    chart: Chart,
    s: State2,
    opts: &ShootingOptions,
) -> Result<DMatrix<f64>, OdeError> {
    let m = monodromy(s, params, profile, chart, &opts.integrator, opts.newton.fd_scale)?;
    let g = m - Matrix2::identity();
    Ok(DMatrix::from_row_slice(2, 2, &[g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]]))
}
