use std::path::Path;

use kslab_core::analysis::{
    blowup_indicator, select_blowup_params, y_functional, BlowupReport, Selection, SelectionInputs, TestFnConstants,
    TestFunction, YFunctional,
};
use kslab_core::solver::{measure_c_sub, ComparisonReport, MonotonicityReport, Subsolution, Trajectory};
use kslab_core::{MassFunction, TestFnParams, ValidatedParams};
use serde::Serialize;

use super::{finish, indicators_csv, initial_state, open_output, parallel_sweep, run_dir};
use crate::config::RunConfig;
use crate::error::LabError;
use crate::output::{csv, OutputDir};

/// Growth of the near-origin slope and of `sup W/s` as `ε` decreases.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeTrend {
    pub probe_time: f64,
    /// `(ε, max_i (W_{i+1} - W_i)/(s_{i+1} - s_i))` at `probe_time`.
    pub slopes: Vec<(f64, f64)>,
    /// Slope at the smallest `ε` over the slope at the largest.
    pub slope_factor: f64,
    /// `(ε, sup W/s)` over all probes and snapshots.
    pub beta1_sups: Vec<(f64, f64)>,
    pub beta1_increasing: bool,
}

/// Everything the blow-up pipeline computes.
#[derive(Debug, Clone, Serialize)]
pub struct BlowupOutcome {
    pub params: ValidatedParams,
    pub eps_list: Vec<f64>,
    pub t_end: f64,
    /// `t0 + η/2`, where `W` enters the selection and the Riccati comparison starts.
    pub t1: f64,
    pub monotonicity: MonotonicityReport,
    pub monotonicity_holds: bool,
    pub c0: f64,
    pub w0_at_one: f64,
    pub c_sub: f64,
    pub c_sub_source: &'static str,
    pub subsolution: ComparisonReport,
    pub subsolution_holds: bool,
    /// `ε` of the run whose `W` stands in for the proper solution.
    pub measured_epsilon: f64,
    pub substitution: String,
    pub test_function: TestFnParams,
    pub constants: TestFnConstants,
    pub selection: Selection,
    pub riccati_rate: f64,
    pub riccati_quadratic: f64,
    pub y: YFunctional,
    pub indicators: Vec<BlowupReport>,
    pub trend: SlopeTrend,
    #[serde(skip)]
    pub runs: Vec<Trajectory>,
}

/// Snapshot times: multiples of `spacing` up to `t_end` together with the
/// `required` times, sorted, with near-duplicates of a required time dropped.
pub fn merge_times(t_end: f64, spacing: f64, required: &[f64]) -> Vec<f64> {
    let count = (t_end / spacing).round() as usize;
    let near = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs());
    let mut times: Vec<f64> = (1..=count)
        .map(|k| k as f64 * spacing)
        .filter(|&t| t < t_end && !required.iter().any(|&r| near(r, t)) && !near(t, t_end))
        .collect();
    times.extend(required.iter().copied().filter(|&r| r > 0.0 && r <= t_end));
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

fn max_forward_slope(w: &MassFunction) -> f64 {
    w.nodes()
        .windows(2)
        .zip(w.values().windows(2))
        .map(|(s, v)| (v[1] - v[0]) / (s[1] - s[0]))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Lower slope `inf W0(s)/s` over `(0, 1]`; exact for the default plateau.
fn lower_slope(config: &RunConfig, w0: &MassFunction) -> Result<f64, LabError> {
    if config.initial.density.is_none() {
        return Ok(config.system.c0);
    }
    let density = config.density();
    let mut c0 = f64::INFINITY;
    for &s in w0.nodes().iter().filter(|&&s| s > 0.0 && s <= 1.0) {
        let w = density
            .mass_function(config.system.dim, s)
            .map_err(|e| LabError::Config(e.to_string()))?;
        c0 = c0.min(w / s);
    }
    Ok(c0)
}

/// Runs the sweep to `t0 + η`, measures `c_sub`, selects `(κ, s0, γ)`, builds
/// `φ` and evaluates `y` and the blow-up indicators.
pub fn blowup_pipeline(config: &RunConfig) -> Result<BlowupOutcome, LabError> {
    let v = config.validated()?;
    if !v.feasible {
        return Err(LabError::Infeasible(format!(
            "f0 = {} does not exceed the threshold {}",
            config.system.f0, v.threshold
        )));
    }
    let b = &config.blowup;
    if !(b.eta > 0.0 && b.t0 >= 0.0) {
        return Err(LabError::Config(format!("need t0 >= 0 and eta > 0 (got {}, {})", b.t0, b.eta)));
    }
    if !(b.output_spacing > 0.0) {
        return Err(LabError::Config(format!("output_spacing must be positive (got {})", b.output_spacing)));
    }
    let t_end = b.t0 + b.eta;
    let t1 = b.t0 + 0.5 * b.eta;
    if !(b.probe_time > 0.0 && b.probe_time <= t_end) {
        return Err(LabError::Config(format!("probe_time must lie in (0, {t_end}] (got {})", b.probe_time)));
    }
    let mesh = config.build_mesh()?;
    let w0 = initial_state(config, &mesh)?;
    let problem = config.problem()?;
    let outs = merge_times(t_end, b.output_spacing, &[b.probe_time, t1, t_end]);
    let base = config.solver.to_config(b.eps_list[0], t_end, outs);
    let sweep = parallel_sweep(&problem, &w0, &base, &b.eps_list)?;
    let runs: Vec<Trajectory> = sweep.trajectories()?.into_iter().cloned().collect();
    let cap = w0.cap();
    let finest = runs.last().ok_or_else(|| LabError::Config("eps_list is empty".into()))?;

    let c0 = lower_slope(config, &w0)?;
    let w0_at_one = config
        .density()
        .mass_function(config.system.dim, 1.0)
        .map_err(|e| LabError::Config(e.to_string()))?;
    let (c_sub, c_sub_source) = match b.c_sub {
        Some(c) => (c, "override"),
        None => (measure_c_sub(finest, w0_at_one, t_end), "measured"),
    };
    let subsolution = Subsolution { c_sub, w0: w0.clone() }.check(finest, t_end);

    let delta = match config.test_function.delta {
        Some(d) => d,
        None => v.default_delta().ok_or_else(|| LabError::Infeasible("no admissible delta".into()))?,
    };
    let xi = config.test_function.xi;
    let constants = TestFnConstants::new(v.dim(), v.params.alpha, v.params.f0, xi, delta);
    let inputs = SelectionInputs {
        t0: b.t0,
        eta: b.eta,
        c0,
        c_sub,
        xi,
        gamma_cap: b.gamma_cap,
    };
    let w_t1 = finest
        .at_time(t1)
        .ok_or_else(|| LabError::Solver(format!("no snapshot at t1 = {t1}")))?;
    let selection =
        select_blowup_params(&v, &constants, &inputs, |s| w_t1.eval(s)).map_err(|e| LabError::Selection(e.to_string()))?;
    let tfp = TestFnParams {
        xi,
        delta,
        gamma: selection.gamma,
    };
    let tf = TestFunction::new(&v, tfp, config.signal_profile()?).map_err(|e| LabError::Selection(e.to_string()))?;
    let y = y_functional(finest, &tf, t1, selection.kappa, b.tolerance).map_err(|e| LabError::Check(e.to_string()))?;

    let indicators = runs
        .iter()
        .map(|r| blowup_indicator(r, &b.betas))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| LabError::Config(e.to_string()))?;
    let trend = slope_trend(&runs, b.probe_time)?;

    Ok(BlowupOutcome {
        params: v,
        eps_list: b.eps_list.clone(),
        t_end,
        t1,
        monotonicity_holds: sweep.report.holds(b.tolerance * cap),
        monotonicity: sweep.report,
        c0,
        w0_at_one,
        c_sub,
        c_sub_source,
        subsolution_holds: subsolution.holds(b.tolerance * cap),
        subsolution,
        measured_epsilon: finest.epsilon(),
        substitution: format!(
            "W(s, t) in the selection and in y(t) is the regularised W at epsilon = {} in place of the proper solution",
            finest.epsilon()
        ),
        test_function: tfp,
        constants,
        selection,
        riccati_rate: tf.rate(),
        riccati_quadratic: tf.quadratic_coefficient(),
        y,
        indicators,
        trend,
        runs,
    })
}

fn slope_trend(runs: &[Trajectory], probe_time: f64) -> Result<SlopeTrend, LabError> {
    let mut slopes = Vec::with_capacity(runs.len());
    let mut beta1_sups = Vec::with_capacity(runs.len());
    for r in runs {
        let w = r
            .at_time(probe_time)
            .ok_or_else(|| LabError::Solver(format!("no snapshot at probe_time = {probe_time}")))?;
        slopes.push((r.epsilon(), max_forward_slope(w)));
        let ind = blowup_indicator(r, &[1.0]).map_err(|e| LabError::Config(e.to_string()))?;
        beta1_sups.push((r.epsilon(), ind.betas[0].sup));
    }
    let slope_factor = match (slopes.first(), slopes.last()) {
        (Some(a), Some(b)) => b.1 / a.1,
        _ => f64::NAN,
    };
    Ok(SlopeTrend {
        probe_time,
        slopes,
        slope_factor,
        beta1_increasing: beta1_sups.windows(2).all(|w| w[1].1 > w[0].1),
        beta1_sups,
    })
}

/// Runs [`blowup_pipeline`] and writes `blowup_report.json`, `y_series.csv`
/// and per-run indicator tables. A failed cap or lower bound on `y` is a
/// `Check` error.
pub fn cmd_blowup(config: &RunConfig, out_dir: &Path) -> Result<BlowupOutcome, LabError> {
    let v = config.validated()?;
    if !v.feasible {
        return Err(LabError::Infeasible(format!(
            "f0 = {} does not exceed the threshold {}",
            config.system.f0, v.threshold
        )));
    }
    let mut out = open_output(out_dir)?;
    let result = blowup_pipeline(config).and_then(|o| write_blowup(&mut out, &o).map(|()| o));
    let result = result.and_then(|o| {
        if !o.y.cap_holds {
            Err(LabError::Check(format!("y exceeds cap * integral(phi) = {}", o.y.cap_bound)))
        } else if !o.y.lower_bound.holds {
            Err(LabError::Check(format!(
                "y(t1) = {} is below the lower bound {}",
                o.y.lower_bound.y_t1, o.y.lower_bound.bound
            )))
        } else {
            Ok(o)
        }
    });
    let details = serde_json::json!({ "config": config });
    finish(out, "blowup", result, &details)
}

fn write_blowup(out: &mut OutputDir, o: &BlowupOutcome) -> Result<(), LabError> {
    out.write_json("blowup_report.json", o)?;
    let overlap = &o.y.riccati.overlap;
    let rows = o.y.times.iter().zip(&o.y.values).map(|(&t, &y)| {
        let z = overlap.iter().find(|p| p.0 == t).map_or(f64::NAN, |p| p.2);
        [t, y, z]
    });
    out.write("y_series.csv", csv(&["t", "y", "z"], rows).as_bytes())?;
    for (run, ind) in o.runs.iter().zip(&o.indicators) {
        out.write(&format!("{}/indicators.csv", run_dir(run.epsilon())), indicators_csv(ind).as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merged_times_keep_required_values() {
        let t = merge_times(0.1, 1e-3, &[0.01, 0.05, 0.1]);
        assert_eq!(t.len(), 100);
        assert!(t.contains(&0.01) && t.contains(&0.05) && t.contains(&0.1));
        assert!(t.windows(2).all(|w| w[1] - w[0] > 5e-4));
    }

    #[test]
    fn slope_of_a_line() {
        let nodes: std::sync::Arc<[f64]> = (0..=4).map(|i| i as f64 * 0.5).collect::<Vec<_>>().into();
        let w = MassFunction::new(nodes, vec![0.0, 1.0, 1.5, 1.75, 2.0], 0.0, 2.0).unwrap();
        assert_eq!(max_forward_slope(&w), 2.0);
    }
}
