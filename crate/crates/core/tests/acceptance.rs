//! Acceptance criteria. Each prints one PASS/FAIL line with its runtime; the
//! process fails if any criterion fails or overruns its budget.

use std::f64::consts::{E, PI};
use std::panic::{self, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use avg_orbit::averaging::{
    average_field, averaged_function, averaged_system, compute_m, corollary_det, existence_check,
    pendulum_standard_field,
};
use avg_orbit::expr::{parse, BinaryOp, Expr, Func, Var};
use avg_orbit::model::{classify_equilibrium, Classification, Forcing, PendulumParams, PerturbationProfile};
use avg_orbit::ode::{fundamental_matrix, integrate, Chart, IntegratorOptions, OdeError, State2};
use avg_orbit::quadrature::QuadratureOptions;
use avg_orbit::shooting::{convergence_study, find_periodic, ShootingOptions, SweepOptions};
use nalgebra::{DVector, Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn forcing(src: &str) -> Arc<dyn Forcing> {
    Arc::new(parse(src).unwrap_or_else(|e| panic!("{src}: {e}")))
}

fn sim_profile() -> PerturbationProfile {
    PerturbationProfile::with_base_period(1.0, forcing("0"), forcing("sin(t)")).unwrap()
}

fn det_pi_squared() -> Outcome {
    let params = PendulumParams::new(1.0, 1.0, 0.1).unwrap();
    let sys = averaged_system(&params, &sim_profile(), &QuadratureOptions::default()).map_err(|e| e.to_string())?;
    let err = (sys.det_m() - PI * PI).abs();
    ensure(err < 1e-8, || format!("det M = {}, error {err:e}", sys.det_m()))?;
    Ok(format!("det M = {:.12}, |det M - pi^2| = {err:.1e}", sys.det_m()))
}

fn corollary_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let c1 = rng.gen_range(-5.0..5.0);
        let c2 = rng.gen_range(-5.0..5.0);
        let a = rng.gen_range(0.5..4.0);
        let b_bar = rng.gen_range(0.1..3.0);
        let params = PendulumParams::new(a, b_bar, 0.1).unwrap();
        let f = format!("({c1:e})*theta + ({c2:e})*thetadot");
        let profile = PerturbationProfile::with_base_period(a, forcing(&f), forcing("0")).unwrap();
        let m = compute_m(&params, &profile, &QuadratureOptions::default()).map_err(|e| e.to_string())?;
        let expected = corollary_det(c1, c2, a, b_bar);
        let rel = (m.determinant() - expected).abs() / expected.abs();
        worst = worst.max(rel);
        ensure(rel < 1e-8, || format!("C1={c1} C2={c2} a={a} b={b_bar}: rel error {rel:e}"))?;
    }
    Ok(format!("20 draws, worst relative error {worst:.1e}"))
}

/// A random trig polynomial of degree ≤ 3 in `w·t`, as DSL text and as a
/// closure.
fn trig_poly(rng: &mut ChaCha8Rng, w: f64) -> (String, impl Fn(f64) -> f64) {
    let c0: f64 = rng.gen_range(-1.0..1.0);
    let terms: Vec<(f64, f64)> = (1..=3).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let mut src = format!("({c0:e})");
    for (k, (ck, sk)) in terms.iter().enumerate() {
        let k = k + 1;
        src += &format!(" + ({ck:e})*cos({k}*({w:e})*t) + ({sk:e})*sin({k}*({w:e})*t)");
    }
    let func = move |t: f64| {
        c0 + terms
            .iter()
            .enumerate()
            .map(|(k, (ck, sk))| {
                let arg = (k + 1) as f64 * w * t;
                ck * arg.cos() + sk * arg.sin()
            })
            .sum::<f64>()
    };
    (src, func)
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let quad = QuadratureOptions::default();
    let mut worst_engine = 0.0f64;
    let mut worst_trapezoid = 0.0f64;
    for _ in 0..10 {
        let a: f64 = rng.gen_range(0.5..3.0);
        let w = a.sqrt();
        let b_bar = rng.gen_range(0.1..3.0);
        let (c1_src, c1) = trig_poly(&mut rng, w);
        let (c2_src, c2) = trig_poly(&mut rng, w);
        let (g0_src, g0) = trig_poly(&mut rng, w);
        // higher-order terms must not change the first-order average
        let f = format!("({c1_src})*theta + ({c2_src})*thetadot + 0.3*theta^2*cos(({w:e})*t) - 0.2*thetadot^3");
        let g = format!("{g0_src} + 0.5*theta*sin(({w:e})*t)");
        let params = PendulumParams::new(a, b_bar, 0.1).unwrap();
        let profile = PerturbationProfile::with_base_period(a, forcing(&f), forcing(&g)).unwrap();
        let sys = averaged_system(&params, &profile, &quad).map_err(|e| e.to_string())?;
        let field = pendulum_standard_field(&params, &profile);
        let period = profile.period();

        for _ in 0..5 {
            let zeta = Vector2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let closed = averaged_function(&sys, &zeta);
            let engine = average_field(&field, period, &DVector::from_row_slice(&[zeta[0], zeta[1]]), &quad)
                .map_err(|e| e.to_string())?;
            let d = ((engine[0] - closed[0]).powi(2) + (engine[1] - closed[1]).powi(2)).sqrt();
            worst_engine = worst_engine.max(d);

            // trapezoid rule is spectrally exact for periodic trig integrands
            let n = 4096;
            let h = period / n as f64;
            let mut acc = Vector2::zeros();
            for k in 0..n {
                let s = k as f64 * h;
                let x = fundamental_matrix(s, a) * zeta;
                let force = g0(s) + c1(s) * x[0] + (c2(s) - b_bar) * x[1];
                acc += fundamental_matrix(-s, a) * Vector2::new(0.0, force);
            }
            let oracle = acc * h;
            let d_oracle = (oracle - closed).norm();
            worst_trapezoid = worst_trapezoid.max(d_oracle);
            ensure(d < 2e-9 && d_oracle < 2e-9, || {
                format!("a={a} zeta={zeta:?}: engine {d:e}, trapezoid {d_oracle:e}")
            })?;
        }
    }
    Ok(format!(
        "10 profiles x 5 points, worst |engine - (M z - v)| = {worst_engine:.1e}, independent trapezoid {worst_trapezoid:.1e}"
    ))
}

fn periodic_orbit() -> Outcome {
    let params = PendulumParams::new(1.0, 1.0, 0.1).unwrap();
    let profile = sim_profile();
    let orbit = find_periodic(&params, &profile, Chart::Rescaled, State2::new(-1.0, 0.0), &ShootingOptions::default())
        .map_err(|e| e.to_string())?;
    let (_, end) = orbit.orbit_samples.last();
    let return_err = (end - orbit.x0).norm();
    let moduli = orbit.floquet.map(|z| z.norm());
    ensure(orbit.residual < 1e-10, || format!("residual {:e}", orbit.residual))?;
    ensure(return_err < 1e-9, || format!("re-integration misses by {return_err:e}"))?;
    ensure(moduli.iter().all(|m| *m < 1.0), || format!("multiplier moduli {moduli:?}"))?;
    Ok(format!(
        "x0 = ({:.6}, {:.6}), residual {:.1e}, return {:.1e}, |mu| = {:.4}, {:.4}",
        orbit.x0.x, orbit.x0.y, orbit.residual, return_err, moduli[0], moduli[1]
    ))
}

fn convergence_sweep() -> Outcome {
    let params = PendulumParams::new(1.0, 1.0, 0.1).unwrap();
    let profile = sim_profile();
    let sys = averaged_system(&params, &profile, &QuadratureOptions::default()).map_err(|e| e.to_string())?;
    ensure(existence_check(&sys, &profile).conditions_hold, || "existence conditions fail".into())?;
    let z0 = sys.z0().ok_or("no z0")?;
    let report = convergence_study(
        &params,
        &profile,
        &[0.2, 0.1, 0.05, 0.025],
        State2::new(z0[0], z0[1]),
        &SweepOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    ensure(report.rows.iter().all(|r| r.converged()), || "a sweep row failed".into())?;
    ensure(report.distances_monotone(), || "distances not monotone".into())?;
    ensure(report.fitted_slope >= 0.8, || format!("slope {}", report.fitted_slope))?;
    let norms: Vec<f64> = report.rows.iter().map(|r| r.original_x0().unwrap().norm()).collect();
    ensure(norms[3] < norms[0], || format!("original-chart norms {norms:?}"))?;
    Ok(format!(
        "slope {:.4}, distances {:.2e} .. {:.2e}, |eps x0| {:.3} -> {:.4}",
        report.fitted_slope,
        report.rows[0].distance.unwrap(),
        report.rows[3].distance.unwrap(),
        norms[0],
        norms[3]
    ))
}

fn series_exp(t: f64, a: f64) -> Matrix2<f64> {
    let at = Matrix2::new(0.0, 1.0, -a, 0.0) * t;
    let mut term = Matrix2::identity();
    let mut sum = term;
    for k in 1..30 {
        term = term * at / k as f64;
        sum += term;
    }
    sum
}

fn fundamental_matrix_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let t = rng.gen_range(-2.0..2.0);
        let a: f64 = rng.gen_range(0.25..4.0);
        let phi = fundamental_matrix(t, a);
        let shifted = fundamental_matrix(t + 2.0 * PI / a.sqrt(), a);
        let errs = [
            (shifted - phi).abs().max(),
            (phi * fundamental_matrix(-t, a) - Matrix2::identity()).abs().max(),
            (phi.determinant() - 1.0).abs(),
            (series_exp(t, a) - phi).abs().max(),
        ];
        let e = errs.iter().copied().fold(0.0, f64::max);
        worst = worst.max(e);
        ensure(e < 1e-12, || format!("t={t} a={a}: errors {errs:?}"))?;
    }
    Ok(format!("100 pairs, worst error {worst:.1e}"))
}

fn integrator_fidelity() -> Outcome {
    let opts = IntegratorOptions::with_tol(1e-10);
    let center = integrate(|_, s: State2| Ok::<_, OdeError>(State2::new(s.y, -s.x)), State2::new(1.0, 0.0), 0.0, 2.0 * PI, &opts)
        .map_err(|e| e.to_string())?;
    let round_trip = (center.final_state() - State2::new(1.0, 0.0)).norm();
    ensure(round_trip < 1e-8, || format!("round trip error {round_trip:e}"))?;

    let energy = |s: &State2| s.y * s.y / 2.0 - s.x.cos();
    let pendulum = integrate(|_, s: State2| Ok::<_, OdeError>(State2::new(s.y, -s.x.sin())), State2::new(1.0, 0.0), 0.0, 20.0, &opts)
        .map_err(|e| e.to_string())?;
    let e0 = energy(&pendulum.first().1);
    let drift = pendulum.samples.iter().map(|(_, s)| (energy(s) - e0).abs()).fold(0.0, f64::max);
    ensure(drift < 1e-7, || format!("energy drift {drift:e}"))?;
    Ok(format!("round trip {round_trip:.1e}, energy drift {drift:.1e}"))
}

fn classification_table() -> Outcome {
    let cases = [
        (1.0, 3.0, Classification::AttractorNode),
        (1.0, 2.0, Classification::AttractorNode),
        (1.0, 1.0, Classification::AttractorFocus),
        (1.0, 0.0, Classification::Center),
    ];
    for (a, b, expected) in cases {
        let got = classify_equilibrium(a, b);
        ensure(got == expected, || format!("(a={a}, b={b}) -> {got}, expected {expected}"))?;
    }
    Ok("(1,3) node, (1,2) node, (1,1) focus, (1,0) center".into())
}

fn random_tree(rng: &mut ChaCha8Rng, depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..4) {
            0 => Expr::var(Var::T),
            1 => Expr::var(Var::Theta),
            2 => Expr::var(Var::ThetaDot),
            _ => Expr::constant(rng.gen_range(-10.0..10.0)),
        };
    }
    match rng.gen_range(0..3) {
        0 => Expr::negate(random_tree(rng, depth - 1)),
        1 => {
            let funcs = [Func::Sin, Func::Cos, Func::Tan, Func::Exp, Func::Log, Func::Sqrt, Func::Abs];
            Expr::call(funcs[rng.gen_range(0..funcs.len())], random_tree(rng, depth - 1))
        }
        _ => {
            let ops = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div, BinaryOp::Pow];
            Expr::binary(
                ops[rng.gen_range(0..ops.len())],
                random_tree(rng, depth - 1),
                random_tree(rng, depth - 1),
            )
        }
    }
}

fn eval_str(src: &str, t: f64, th: f64, thd: f64) -> Result<f64, String> {
    parse(src).map_err(|e| e.to_string())?.eval(t, th, thd).map_err(|e| e.to_string())
}

fn parser_suite() -> Outcome {
    let (t, th, thd) = (0.7, -1.3, 2.1);
    let corpus: [(&str, f64); 27] = [
        ("1 + 2 * 3", 7.0),
        ("(1 + 2) * 3", 9.0),
        ("2 ^ 3 ^ 2", 512.0),
        ("(2 ^ 3) ^ 2", 64.0),
        ("-2 ^ 2", -4.0),
        ("(-2) ^ 2", 4.0),
        ("2 ^ -1", 0.5),
        ("10 - 4 - 3", 3.0),
        ("100 / 10 / 5", 2.0),
        ("2 * 3 / 4", 1.5),
        ("1 - -1", 2.0),
        ("--t", t),
        ("-t * 2", -2.0 * t),
        ("pi", PI),
        ("e", E),
        ("2*pi", 2.0 * PI),
        ("sin(t)^2 + cos(t)^2", t.sin().powi(2) + t.cos().powi(2)),
        ("theta*thetadot + t", th * thd + t),
        ("abs(theta)", 1.3),
        ("sqrt(4) * exp(0)", 2.0),
        ("log(e)", 1.0),
        ("tan(0)", 0.0),
        ("3*theta + 5*thetadot", 3.0 * th + 5.0 * thd),
        ("1e-3 * 2", 2e-3),
        ("2 * -3 ^ 2", -18.0),
        ("-(t + 1) * (t - 1)", -((t + 1.0) * (t - 1.0))),
        ("thetadot^2 / 2 - cos(theta)", thd * thd / 2.0 - th.cos()),
    ];
    for (src, expected) in corpus {
        let got = eval_str(src, t, th, thd)?;
        ensure((got - expected).abs() <= 1e-15 * expected.abs().max(1.0), || {
            format!("{src}: {got} vs {expected}")
        })?;
    }
    ensure(parse("2*t+1").map(|e| e.canonical()) == Ok("((2 * t) + 1)".into()), || "canonical form".into())?;
    ensure(parse("1 + + 2").map_err(|e| e.offset) == Err(4), || "'1 + + 2' offset".into())?;
    ensure(eval_str("1/ (t-1)", 1.0, 0.0, 0.0).is_err(), || "division by zero not reported".into())?;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut compared = 0;
    for _ in 0..50 {
        let tree = random_tree(&mut rng, 6);
        ensure(tree.depth() <= 7, || "generator exceeded depth".into())?;
        let text = tree.canonical();
        let reparsed = parse(&text).map_err(|e| format!("{text}: {e}"))?;
        for _ in 0..20 {
            let (t, th, thd) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let lhs = tree.eval(t, th, thd).map(f64::to_bits).map_err(|e| e.to_string());
            let rhs = reparsed.eval(t, th, thd).map(f64::to_bits).map_err(|e| e.to_string());
            ensure(lhs.is_ok() == rhs.is_ok() && lhs.as_ref().ok() == rhs.as_ref().ok(), || {
                format!("{text} at ({t}, {th}, {thd}): {lhs:?} vs {rhs:?}")
            })?;
            compared += 1;
        }
    }
    Ok(format!("{} corpus expressions, 50 random trees x 20 points ({compared} comparisons)", corpus.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 det(M) = pi^2 for the simulation profile", Duration::from_secs(1), det_pi_squared),
        ("2 closed-form determinant for constant coefficients", Duration::from_secs(5), corollary_agreement),
        ("3 averaged-field oracle equivalence", Duration::from_secs(10), oracle_equivalence),
        ("4 periodic orbit at epsilon = 0.1", Duration::from_secs(10), periodic_orbit),
        ("5 convergence of the fixed point as epsilon -> 0", Duration::from_secs(60), convergence_sweep),
        ("6 fundamental matrix properties", Duration::from_secs(1), fundamental_matrix_properties),
        ("7 integrator fidelity", Duration::from_secs(5), integrator_fidelity),
        ("8 equilibrium classification", Duration::from_secs(1), classification_table),
        ("9 parser suite", Duration::from_secs(2), parser_suite),
    ];
    let mut failures = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > budget => Err(format!("{detail}; exceeded {budget:?} budget")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS  {name}  [{:.3}s]  {detail}", elapsed.as_secs_f64()),
            Err(detail) => {
                failures += 1;
                println!("FAIL  {name}  [{:.3}s]  {detail}", elapsed.as_secs_f64());
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", 9 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
