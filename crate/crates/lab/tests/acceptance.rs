//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::process::Command;
use std::time::Instant;

use kslab::commands::{blowup_pipeline, residual_study, BlowupOutcome};
use kslab::output::verify_manifest;
use kslab::RunConfig;
use kslab_core::analysis::{
    gronwall_compare, log_grid, rk4, verify_integral_bound, verify_ode_inequality, PiecewiseLinear, Riccati,
    TestFnConstants, TestFunction,
};
use kslab_core::params::delta_quadratic;
use kslab_core::solver::{measure_c_sub, solve_regularized, Subsolution};
use kslab_core::{
    delta_lower_bound, f0_threshold, Breakpoints, BridgeKind, SignalProfile, SystemParams, TestFnParams,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

const SCENARIO: &str = include_str!("../../../configs/scenario.toml");

type Verdict = Result<String, String>;

fn scenario() -> RunConfig {
    RunConfig::from_toml(SCENARIO).expect("scenario config parses")
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_dim_alpha(rng: &mut StdRng) -> (u32, f64) {
    let n = rng.gen_range(3u32..=6);
    let alpha = rng.gen_range(2.0 + 1e-6..n as f64 - 1e-6);
    (n, alpha)
}

/// Sign scan of the quadratic on 10⁴ points of `((n-α)/n, 1)`, spaced
/// geometrically in the distance to 1 from `1 - (n-α)/n` down to 1e-14, since
/// any feasible set is an interval ending at 1.
fn scan_feasible(n: u32, alpha: f64, f0: f64) -> bool {
    let width = alpha / n as f64;
    let samples = 10_000;
    let ratio = (1e-14 / width).ln() / (samples - 1) as f64;
    (0..samples).any(|k| {
        let d = 1.0 - width * (ratio * k as f64).exp();
        d > 1.0 - width && delta_quadratic(n, alpha, f0, d) > 0.0
    })
}

fn criterion_1() -> Verdict {
    let mut rng = StdRng::seed_from_u64(1);
    let mut disagreements = 0;
    let mut feasible = 0;
    for _ in 0..1000 {
        let (n, alpha) = random_dim_alpha(&mut rng);
        let thr = f0_threshold(n, alpha).map_err(|e| e.to_string())?;
        let f0 = thr * rng.gen_range(-2.0f64..2.0).exp2();
        let lb = delta_lower_bound(n, alpha, f0).map_err(|e| e.to_string())?;
        let claimed = lb < 1.0;
        feasible += claimed as usize;
        if claimed != (f0 > thr) || claimed != scan_feasible(n, alpha, f0) {
            disagreements += 1;
        }
    }
    check(
        disagreements == 0,
        format!("1000 samples, {feasible} feasible, {disagreements} disagreements"),
    )
}

#[derive(Debug)]
struct TupleCheck {
    continuity: f64,
    slope_continuity: f64,
    min_margin: f64,
    integral_ok: bool,
    outer_error: f64,
}

fn random_tuple(rng: &mut StdRng) -> (SystemParams, TestFnParams) {
    let (n, alpha) = random_dim_alpha(rng);
    let thr = f0_threshold(n, alpha).unwrap();
    let f0 = thr * rng.gen_range(1.05..5.0);
    let radius = rng.gen_range(0.2..0.9);
    let rho = radius * rng.gen_range(0.05..0.45);
    let p = SystemParams {
        dim: n,
        alpha,
        f0,
        radius,
        rho,
        c0: 1.0,
    };
    let lb = delta_lower_bound(n, alpha, f0).unwrap();
    let nn = n as f64;
    let xi = 4.0 - 4.0 / nn * rng.gen_range(0.0..0.95);
    let delta = lb + (1.0 - lb) * rng.gen_range(0.05..0.95);
    let gamma = 4.0 / (radius - rho) * 10f64.powf(rng.gen_range(0.01..3.0));
    (p, TestFnParams { xi, delta, gamma })
}

fn certify(p: SystemParams, tfp: TestFnParams) -> Result<TupleCheck, String> {
    let v = p.validate().map_err(|e| e.to_string())?;
    let signal = SignalProfile::with_options(&p, BridgeKind::default(), Breakpoints::LiteralS).map_err(|e| e.to_string())?;
    let tf = TestFunction::new(&v, tfp, signal).map_err(|e| e.to_string())?;
    let kink = tf.kink();
    let below = f64::from_bits(kink.to_bits() - 1);
    let (pi, psi, _) = tf.eval(below).map_err(|e| e.to_string())?;
    let e = (-tfp.xi).exp();
    let margins = verify_ode_inequality(&tf, &log_grid(1e-8, 10.0, 10_000));
    let ib = verify_integral_bound(&tf).map_err(|e| e.to_string())?;
    Ok(TupleCheck {
        continuity: (pi - e).abs() / e,
        slope_continuity: (psi + tfp.gamma * e).abs() / (tfp.gamma * e),
        min_margin: margins.min_margin,
        integral_ok: ib.numeric <= ib.bound,
        outer_error: (ib.outer_numeric - ib.outer_exact).abs() / ib.outer_exact,
    })
}

fn criterion_2() -> Verdict {
    let mut rng = StdRng::seed_from_u64(2);
    let tuples: Vec<_> = (0..200).map(|_| random_tuple(&mut rng)).collect();
    let checks: Vec<Result<TupleCheck, String>> = tuples.par_iter().map(|&(p, t)| certify(p, t)).collect();
    let mut worst = TupleCheck {
        continuity: 0.0,
        slope_continuity: 0.0,
        min_margin: f64::INFINITY,
        integral_ok: true,
        outer_error: 0.0,
    };
    for c in checks {
        let c = c?;
        worst.continuity = worst.continuity.max(c.continuity);
        worst.slope_continuity = worst.slope_continuity.max(c.slope_continuity);
        worst.min_margin = worst.min_margin.min(c.min_margin);
        worst.integral_ok &= c.integral_ok;
        worst.outer_error = worst.outer_error.max(c.outer_error);
    }
    check(
        worst.continuity <= 1e-10
            && worst.slope_continuity <= 1e-10
            && worst.min_margin >= -1e-9
            && worst.integral_ok
            && worst.outer_error <= 1e-8,
        format!(
            "200 tuples: continuity {:.2e}, slope continuity {:.2e}, min margin {:.3e}, integral bound {}, outer piece error {:.2e}",
            worst.continuity, worst.slope_continuity, worst.min_margin, worst.integral_ok, worst.outer_error
        ),
    )
}

fn criterion_3(config: &RunConfig) -> Verdict {
    let mesh = config.build_mesh().map_err(|e| e.to_string())?;
    let w0 = kslab::commands::initial_state(config, &mesh).map_err(|e| e.to_string())?;
    let problem = config.problem().map_err(|e| e.to_string())?;
    let traj = solve_regularized(&problem, &w0, &config.solver.base_config()).map_err(|e| e.to_string())?;
    let cap = w0.cap();
    let bad: Vec<f64> = traj
        .snapshots
        .iter()
        .filter(|m| !m.invariants().holds(cap, 1e-8, 1e-8))
        .map(|m| m.time())
        .collect();
    let min_increment = traj
        .snapshots
        .iter()
        .map(|m| m.invariants().min_increment)
        .fold(f64::INFINITY, f64::min);
    let max_value = traj
        .snapshots
        .iter()
        .map(|m| m.invariants().max_value)
        .fold(f64::NEG_INFINITY, f64::max);
    let t_end = config.solver.t_end;
    let c_sub = measure_c_sub(&traj, 1.0, t_end);
    let sub = Subsolution { c_sub, w0 }.check(&traj, t_end);
    check(
        bad.is_empty() && sub.holds(1e-6 * cap),
        format!(
            "N = {}, {} snapshots to t = {t_end}: max W / cap = {:.15}, min increment {:.3e}, c_sub = {c_sub}, subsolution margin {:.3e}",
            mesh.cells(),
            traj.snapshots.len(),
            max_value / cap,
            min_increment,
            sub.worst_margin
        ),
    )
}

fn criterion_4(o: &BlowupOutcome) -> Verdict {
    let cap = o.runs[0].cap();
    let shared: usize = o.monotonicity.pairs.iter().map(|p| p.shared_times).sum();
    check(
        o.monotonicity.holds(1e-6 * cap) && o.monotonicity.pairs.len() == 2,
        format!(
            "eps {:?}, {} pair comparisons over {shared} shared times, max violation {:.3e}",
            o.eps_list,
            o.monotonicity.pairs.len(),
            o.monotonicity.max_violation
        ),
    )
}

fn criterion_5(o: &BlowupOutcome) -> Verdict {
    let t = &o.trend;
    check(
        t.slope_factor >= 2.0 && t.beta1_increasing,
        format!(
            "slopes at t = {} {:?}, factor {:.2}; sup W/s {:?}",
            t.probe_time, t.slopes, t.slope_factor, t.beta1_sups
        ),
    )
}

fn criterion_6() -> Verdict {
    let mut rng = StdRng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let a = rng.gen_range(0.01..50.0);
        let b = rng.gen_range(0.01..50.0);
        let y1 = rng.gen_range(0.01..10.0);
        let r = Riccati::new(a, b, y1, 0.0).map_err(|e| e.to_string())?;
        let horizon = 0.9 * r.blow_up_time();
        let (mut y, mut t) = (y1, 0.0);
        for k in 1..=200 {
            let next = horizon * k as f64 / 200.0;
            y = rk4(|z| a * z + b * z * z, y, t, next, 200);
            t = next;
            let z = r.eval(t).map_err(|e| e.to_string())?;
            worst = worst.max((y - z).abs() / z);
        }
    }
    let unit = Riccati::new(1.0, 1.0, 1.0, 0.0).map_err(|e| e.to_string())?.blow_up_time();
    let t_err = (unit - std::f64::consts::LN_2).abs();
    let phi = PiecewiseLinear::new(vec![0.0, 1.0], vec![0.0, 0.7]).map_err(|e| e.to_string())?;
    let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.05).collect();
    let y: Vec<f64> = times.iter().map(|t| 1.3 * (0.7 * t).exp()).collect();
    let g = gronwall_compare(&times, &y, &phi, 1.3, 1e-9).map_err(|e| e.to_string())?;
    check(
        worst <= 1e-8 && t_err <= 1e-12 && g.passed,
        format!(
            "RK4 deviation {worst:.2e} over 100 triples, |T(1,1,1) - ln 2| = {t_err:.1e}, equality case margin {:.2e}",
            g.worst_margin
        ),
    )
}

fn criterion_7(config: &RunConfig) -> Verdict {
    let st = residual_study(config).map_err(|e| e.to_string())?;
    let orders: Vec<String> = st.fields.iter().map(|f| format!("{:.3}", f.order)).collect();
    check(
        st.fields.len() == 3 && st.fields.iter().all(|f| f.order >= 1.0) && st.constant.residual <= 1e-8 * st.constant.scale,
        format!(
            "orders [{}] ({:?}, {} -> {} cells), constant state {:.2e} of scale",
            orders.join(", "),
            st.advection,
            st.coarse_cells,
            st.fine_cells,
            st.constant_relative
        ),
    )
}

fn criterion_8(config: &RunConfig, o: &BlowupOutcome) -> Verdict {
    let s = &o.selection;
    let v = &o.params;
    let n = v.dim() as f64;
    let tf = &o.test_function;
    let c = TestFnConstants::new(v.dim(), v.params.alpha, v.params.f0, tf.xi, tf.delta);
    let kappa_exact = s.kappa == c.k0 * config.blowup.eta / 8.0;
    let gamma_ok = s.gamma >= 10f64.max(14437.1 * (1.0 - 1e-12));
    let bound = (2.0 * s.kappa.powf(n / (n - 2.0)) / (3.0 * (n - 2.0))).powf((n - 2.0) / 2.0);
    let s0_monotone = s.s0 < bound;
    let sinh_lhs = o.c0 * o.c_sub * s.s0.powi(3) * (s.kappa * (s.kappa / s.s0).powf(2.0 / (n - 2.0))).sinh();
    let sinh_ok = sinh_lhs >= c.k0 * c.big_k0 / s.kappa * (1.0 - 1e-9);
    let w = o.runs.last().and_then(|r| r.at_time(o.t1)).map(|m| m.eval(s.probe)).unwrap_or(f64::NAN);
    let x = s.kappa * s.gamma.powf(2.0 / n);
    let growth_ok = 1.0 + 2.0 * c.k0 * c.big_k0 * x.exp() / (w * s.gamma.powf((n - 2.0) / n)) <= (2.0 * x).exp();

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config_path = dir.path().join("scenario.toml");
    std::fs::write(&config_path, SCENARIO).map_err(|e| e.to_string())?;
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_kslab"))
        .args(["blowup", "--config"])
        .arg(&config_path)
        .arg("--out")
        .arg(&out)
        .output()
        .map_err(|e| e.to_string())?;
    let exit = status.status.code();
    let bad_hashes = verify_manifest(&out).map_err(|e| e.to_string())?;
    check(
        kappa_exact && gamma_ok && s0_monotone && sinh_ok && growth_ok && exit == Some(0) && bad_hashes.is_empty(),
        format!(
            "kappa = {} (exact {kappa_exact}), gamma = {} after {} doublings, s0 = {:.6e} < {bound:.6e}, sinh bound {sinh_ok}, \
             growth with W(s*) = {w:.6} {growth_ok}, cli exit {exit:?}, manifest mismatches {}",
            s.kappa,
            s.gamma,
            s.doublings,
            s.s0,
            bad_hashes.len()
        ),
    )
}

fn report(index: u32, name: &str, started: Instant, verdict: &Verdict) -> bool {
    let elapsed = started.elapsed();
    let (tag, detail) = match verdict {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("{tag} criterion {index} ({name}, {:.1} s): {detail}", elapsed.as_secs_f64());
    verdict.is_ok()
}

fn main() {
    let config = scenario();
    let mut all = true;

    let t = Instant::now();
    all &= report(1, "feasibility algebra", t, &criterion_1());
    let t = Instant::now();
    all &= report(2, "test-function certification", t, &criterion_2());
    let t = Instant::now();
    all &= report(3, "solver invariants", t, &criterion_3(&config));

    let t = Instant::now();
    let pipeline = blowup_pipeline(&config).map_err(|e| e.to_string());
    match &pipeline {
        Ok(o) => {
            all &= report(4, "epsilon monotonicity", t, &criterion_4(o));
            all &= report(5, "blow-up trend", t, &criterion_5(o));
        }
        Err(e) => {
            all &= report(4, "epsilon monotonicity", t, &Err(e.clone()));
            all &= report(5, "blow-up trend", t, &Err(e.clone()));
        }
    }
    let t = Instant::now();
    all &= report(6, "Riccati machinery", t, &criterion_6());
    let t = Instant::now();
    all &= report(7, "weak-residual convergence", t, &criterion_7(&config));
    let t = Instant::now();
    let v8 = match &pipeline {
        Ok(o) => criterion_8(&config, o),
        Err(e) => Err(e.clone()),
    };
    all &= report(8, "parameter selection pipeline", t, &v8);

    if !all {
        std::process::exit(1);
    }
}
