//! Command-line front end: `analyze`, `simulate`, `find-orbit` and `sweep`
//! over a JSON problem config.
//!
//! Exit codes: 0 success, 1 usage/config/numerical error, 2 existence
//! conditions not established, 3 shooting or sweep verification failed.

pub mod config;
pub mod json;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::averaging::{averaged_system, existence_check, AveragedSystem, ExistenceVerdict};
use crate::ode::{Chart, State2};
use crate::shooting::{convergence_study, find_periodic, ShootingError, SweepOptions};
use config::{Problem, ProblemConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NO_EXISTENCE: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;

/// Smallest fitted log-log slope a sweep accepts as first-order convergence.
pub const MIN_SWEEP_SLOPE: f64 = 0.8;

#[derive(Debug, Parser)]
#[command(name = "avg-orbit", version, about = "Periodic orbits of the perturbed damped pendulum by averaging")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Averaged system and existence conditions.
    Analyze(CommonArgs),
    /// Integrate one trajectory and write it as CSV.
    Simulate(SimulateArgs),
    /// Shoot for the periodic orbit seeded by the averaging prediction.
    FindOrbit(FindOrbitArgs),
    /// Shoot over a decreasing ε list and fit the convergence rate.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value = "original")]
    pub chart: Chart,
    /// End time; one period `T` when absent.
    #[arg(long)]
    pub t1: Option<f64>,
    /// Initial state `x,y` in the chosen chart.
    #[arg(long, value_parser = parse_state, default_value = "0,0", allow_hyphen_values = true)]
    pub s0: State2,
}

#[derive(Debug, Args)]
pub struct FindOrbitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value = "rescaled")]
    pub chart: Chart,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Worker threads when warm starts are disabled.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: u64,
}

fn parse_state(s: &str) -> Result<State2, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected x,y but got '{s}'"));
    }
    let num = |p: &str| {
        p.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("'{p}' is not a finite number"))
    };
    Ok(State2::new(num(parts[0])?, num(parts[1])?))
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn error(e: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_ERROR,
            message: e.to_string(),
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    match execute(&cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn execute(cmd: &Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    match cmd {
        Command::Analyze(args) => cmd_analyze(args, stdout, stderr),
        Command::Simulate(args) => cmd_simulate(args, stdout),
        Command::FindOrbit(args) => cmd_find_orbit(args, stdout, stderr),
        Command::Sweep(args) => cmd_sweep(args, stdout, stderr),
    }
}

fn load(path: &Path) -> Result<Problem, Failure> {
    ProblemConfig::from_path(path)
        .and_then(|c| c.build())
        .map_err(Failure::error)
}

fn emit(out: Option<&Path>, stdout: &mut dyn Write, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::error(format!("cannot write {}: {e}", path.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(Failure::error),
    }
}

#[derive(Serialize)]
pub struct AnalyzeReport {
    pub averaged_system: AveragedSystem,
    pub verdict: ExistenceVerdict,
}

/// Averaged system and verdict for a problem.
pub fn analyze(problem: &Problem) -> Result<AnalyzeReport, Failure> {
    let sys = averaged_system(&problem.params, &problem.profile, &problem.config.quadrature_options())
        .map_err(Failure::error)?;
    let verdict = existence_check(&sys, &problem.profile);
    Ok(AnalyzeReport {
        averaged_system: sys,
        verdict,
    })
}

fn report_verdict(verdict: &ExistenceVerdict, stderr: &mut dyn Write) {
    for d in &verdict.diagnostics {
        let _ = writeln!(stderr, "diagnostic: {d}");
    }
}

fn cmd_analyze(args: &CommonArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    let problem = load(&args.config)?;
    let report = analyze(&problem)?;
    emit(args.out.as_deref(), stdout, &json::to_string(&report))?;
    report_verdict(&report.verdict, stderr);
    Ok(if report.verdict.conditions_hold {
        EXIT_OK
    } else {
        EXIT_NO_EXISTENCE
    })
}

fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let problem = load(&args.common.config)?;
    let t1 = args.t1.unwrap_or(problem.profile.period());
    if !(t1.is_finite() && t1 > 0.0) {
        return Err(Failure::error(format!("--t1 must be a positive real, got {t1}")));
    }
    let system = crate::ode::PendulumSystem::new(problem.params, &problem.profile);
    let traj = system
        .integrate(args.chart, args.s0, 0.0, t1, &problem.config.integrator_options())
        .map_err(Failure::error)?;
    emit(args.common.out.as_deref(), stdout, &traj.to_csv())?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct OrbitReport {
    epsilon: f64,
    chart: Chart,
    period: f64,
    seed: [f64; 2],
    x0: [f64; 2],
    x0_rescaled: [f64; 2],
    x0_original: [f64; 2],
    residual: f64,
    iterations: usize,
    monodromy: [f64; 4],
    floquet_multipliers: [[f64; 2]; 2],
    floquet_moduli: [f64; 2],
    attracting: bool,
}

fn pair(s: State2) -> [f64; 2] {
    [s.x, s.y]
}

fn cmd_find_orbit(args: &FindOrbitArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    let problem = load(&args.common.config)?;
    let report = analyze(&problem)?;
    report_verdict(&report.verdict, stderr);
    let z0 = match (report.verdict.conditions_hold, report.averaged_system.z0()) {
        (true, Some(z)) => State2::new(z[0], z[1]),
        _ => {
            let _ = writeln!(stderr, "existence conditions not established; no orbit sought");
            return Ok(EXIT_NO_EXISTENCE);
        }
    };
    let params = &problem.params;
    let seed = Chart::Rescaled
        .convert(args.chart, 0.0, z0, params)
        .map_err(Failure::error)?;
    let orbit = match find_periodic(params, &problem.profile, args.chart, seed, &problem.config.shooting_options()) {
        Ok(orbit) => orbit,
        Err(e @ (ShootingError::Newton(_) | ShootingError::Integration(_))) => {
            let _ = writeln!(stderr, "shooting failed: {e}");
            if params.epsilon() == 0.0 {
                let _ = writeln!(
                    stderr,
                    "at epsilon = 0 the time-T map is the identity, so every point is fixed and the shooting Jacobian is singular"
                );
            }
            return Ok(EXIT_VERIFICATION);
        }
        Err(e) => return Err(Failure::error(e)),
    };
    let rescaled = orbit.x0_in(Chart::Rescaled, params).map_err(Failure::error)?;
    let original = orbit.x0_in(Chart::Original, params).map_err(Failure::error)?;
    let m = orbit.monodromy;
    let out = OrbitReport {
        epsilon: orbit.epsilon,
        chart: orbit.chart,
        period: orbit.period,
        seed: pair(seed),
        x0: pair(orbit.x0),
        x0_rescaled: pair(rescaled),
        x0_original: pair(original),
        residual: orbit.residual,
        iterations: orbit.iterations,
        monodromy: [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]],
        floquet_multipliers: orbit.floquet.map(|z| [z.re, z.im]),
        floquet_moduli: orbit.floquet.map(|z| z.norm()),
        attracting: orbit.is_attracting(),
    };
    emit(args.common.out.as_deref(), stdout, &json::to_string(&out))?;
    if let Some(path) = &args.common.out {
        let csv_path = path.with_extension("csv");
        fs::write(&csv_path, orbit.orbit_samples.to_csv())
            .map_err(|e| Failure::error(format!("cannot write {}: {e}", csv_path.display())))?;
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SweepRowReport {
    epsilon: f64,
    converged: bool,
    x0: Option<[f64; 2]>,
    distance: Option<f64>,
    x0_original: Option<[f64; 2]>,
    original_norm: Option<f64>,
    residual: Option<f64>,
    iterations: Option<usize>,
    error: Option<String>,
}

#[derive(Serialize)]
struct SweepSummary {
    z0: [f64; 2],
    warm_start: bool,
    fitted_slope: f64,
    min_slope: f64,
    distances_monotone: bool,
    original_norms_decreasing: bool,
    passed: bool,
    rows: Vec<SweepRowReport>,
}

fn cmd_sweep(args: &SweepArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    let problem = load(&args.common.config)?;
    let cfg = &problem.config;
    let epsilons = cfg.sweep_epsilons().map_err(Failure::error)?;
    let warm_start = cfg.sweep.as_ref().is_some_and(|s| s.warm_start);
    let report = analyze(&problem)?;
    report_verdict(&report.verdict, stderr);
    let z0 = match (report.verdict.conditions_hold, report.averaged_system.z0()) {
        (true, Some(z)) => State2::new(z[0], z[1]),
        _ => {
            let _ = writeln!(stderr, "existence conditions not established; no sweep run");
            return Ok(EXIT_NO_EXISTENCE);
        }
    };
    let opts = SweepOptions {
        shooting: cfg.shooting_options(),
        warm_start,
        jobs: args.jobs as usize,
    };
    let study = match convergence_study(&problem.params, &problem.profile, epsilons, z0, &opts) {
        Ok(study) => study,
        Err(e @ ShootingError::InsufficientRows { .. }) => {
            let _ = writeln!(stderr, "sweep failed: {e}");
            return Ok(EXIT_VERIFICATION);
        }
        Err(e) => return Err(Failure::error(e)),
    };

    let rows: Vec<SweepRowReport> = study
        .rows
        .iter()
        .map(|r| {
            let orig = r.original_x0();
            SweepRowReport {
                epsilon: r.epsilon,
                converged: r.converged(),
                x0: r.x0.map(pair),
                distance: r.distance,
                x0_original: orig.map(pair),
                original_norm: orig.map(|s| s.norm()),
                residual: r.residual,
                iterations: r.iterations,
                error: r.error.clone(),
            }
        })
        .collect();
    let norms: Vec<f64> = rows.iter().filter_map(|r| r.original_norm).collect();
    let original_norms_decreasing = norms.windows(2).all(|w| w[1] < w[0]);
    let distances_monotone = study.distances_monotone();
    let passed = distances_monotone && study.fitted_slope >= MIN_SWEEP_SLOPE;
    let summary = SweepSummary {
        z0: pair(z0),
        warm_start,
        fitted_slope: study.fitted_slope,
        min_slope: MIN_SWEEP_SLOPE,
        distances_monotone,
        original_norms_decreasing,
        passed,
        rows,
    };

    let summary_json = json::to_string(&summary);
    match &args.common.out {
        Some(path) => {
            emit(Some(path), stdout, &study.to_csv())?;
            emit(Some(&path.with_extension("json")), stdout, &summary_json)?;
        }
        None => {
            emit(None, stdout, &study.to_csv())?;
            let _ = stderr.write_all(summary_json.as_bytes());
        }
    }
    if !passed {
        let _ = writeln!(
            stderr,
            "sweep verification failed: monotone = {distances_monotone}, slope = {:.4} (need >= {MIN_SWEEP_SLOPE})",
            study.fitted_slope
        );
        return Ok(EXIT_VERIFICATION);
    }
    Ok(EXIT_OK)
}

/// Entry point for the binary.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run(args, &mut stdout.lock(), &mut stderr.lock())
}
