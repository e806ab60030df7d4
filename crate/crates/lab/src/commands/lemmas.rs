use std::path::Path;

use kslab_core::analysis::{log_grid, verify_integral_bound, verify_ode_inequality, TestFunction};
use kslab_core::{SignalProfile, SystemParams, TestFnParams};
use rayon::prelude::*;
use serde::Serialize;

use super::{finish, open_output};
use crate::config::{LemmaSection, LemmaTuple, RunConfig, ScanFiles};
use crate::error::LabError;
use crate::output::{csv, fmt_f64, OutputDir};

/// Relative jump of `φ` across `ξ/γ` tolerated by the continuity check.
const CONTINUITY_TOL: f64 = 1e-9;

/// Outcome of the lemma checks for one tuple.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaRow {
    pub index: usize,
    pub tuple: LemmaTuple,
    pub threshold: f64,
    pub delta_lower_bound: f64,
    pub constructed: bool,
    pub continuity_gap: f64,
    pub min_margin: f64,
    pub margin_at_s: f64,
    pub evaluated: usize,
    pub skipped: usize,
    pub ode_pass: bool,
    pub integral_numeric: f64,
    pub integral_bound: f64,
    pub integral_pass: bool,
    pub pass: bool,
    pub error: Option<String>,
    #[serde(skip)]
    pub scan: Vec<(f64, f64)>,
}

impl LemmaRow {
    fn failed(index: usize, tuple: LemmaTuple, threshold: f64, delta_lower_bound: f64, error: String) -> Self {
        LemmaRow {
            index,
            tuple,
            threshold,
            delta_lower_bound,
            constructed: false,
            continuity_gap: f64::NAN,
            min_margin: f64::NAN,
            margin_at_s: f64::NAN,
            evaluated: 0,
            skipped: 0,
            ode_pass: false,
            integral_numeric: f64::NAN,
            integral_bound: f64::NAN,
            integral_pass: false,
            pass: false,
            error: Some(error),
            scan: Vec::new(),
        }
    }
}

/// 100 tuples around `[system]`: five `f0` above the threshold, four `δ`
/// spread over `(δ_lb, 1)` and five `γ` multiples of `4/(R - ρ)`.
pub fn default_grid(config: &RunConfig) -> Result<Vec<LemmaTuple>, LabError> {
    let v = config.validated()?;
    let p = config.system;
    let xi = config.test_function.xi;
    let mut grid = Vec::with_capacity(100);
    for f_scale in [0.5, 1.0, 2.0, 4.0, 8.0] {
        let f0 = v.threshold + (p.f0 - v.threshold) * f_scale;
        let lb = kslab_core::delta_lower_bound(p.dim, p.alpha, f0).map_err(|e| LabError::Config(e.to_string()))?;
        for d_frac in [0.2, 0.4, 0.6, 0.8] {
            let delta = lb.max(0.0) + (1.0 - lb.max(0.0)) * d_frac;
            for g_scale in [1.5, 2.0, 5.0, 25.0, 250.0] {
                grid.push(LemmaTuple {
                    dim: p.dim,
                    alpha: p.alpha,
                    f0,
                    radius: p.radius,
                    rho: p.rho,
                    xi,
                    delta,
                    gamma: v.gamma_floor() * g_scale,
                });
            }
        }
    }
    Ok(grid)
}

pub fn lemma_grid(config: &RunConfig) -> Result<Vec<LemmaTuple>, LabError> {
    let grid = match &config.lemmas.grid {
        Some(g) => g.clone(),
        None => default_grid(config)?,
    };
    if grid.is_empty() {
        return Err(LabError::Config("the lemma grid is empty".into()));
    }
    Ok(grid)
}

/// Builds `φ` for one tuple and runs the continuity, differential-inequality
/// and integral checks.
pub fn verify_tuple(index: usize, tuple: LemmaTuple, config: &RunConfig) -> LemmaRow {
    let section: &LemmaSection = &config.lemmas;
    let system = SystemParams {
        dim: tuple.dim,
        alpha: tuple.alpha,
        f0: tuple.f0,
        radius: tuple.radius,
        rho: tuple.rho,
        c0: config.system.c0,
    };
    let v = match system.validate() {
        Ok(v) => v,
        Err(e) => return LemmaRow::failed(index, tuple, f64::NAN, f64::NAN, e.to_string()),
    };
    let fail = |msg: String| LemmaRow::failed(index, tuple, v.threshold, v.delta_lower_bound, msg);
    let signal = match SignalProfile::with_options(&system, config.signal.bridge, section.breakpoints) {
        Ok(s) => s,
        Err(e) => return fail(e.to_string()),
    };
    let tfp = TestFnParams {
        xi: tuple.xi,
        delta: tuple.delta,
        gamma: tuple.gamma,
    };
    let tf = match TestFunction::new(&v, tfp, signal) {
        Ok(tf) => tf,
        Err(e) => return fail(e.to_string()),
    };
    let kink = tf.kink();
    let continuity_gap = match (tf.eval(kink * (1.0 - 1e-13)), tf.eval(kink)) {
        (Ok((inner, ..)), Ok((outer, ..))) => (inner - outer).abs() / outer,
        (Err(e), _) | (_, Err(e)) => return fail(e.to_string()),
    };
    let margins = verify_ode_inequality(&tf, &log_grid(section.s_min, section.s_max, section.points));
    let integral = match verify_integral_bound(&tf) {
        Ok(i) => i,
        Err(e) => return fail(e.to_string()),
    };
    let continuity_pass = continuity_gap <= CONTINUITY_TOL;
    LemmaRow {
        index,
        tuple,
        threshold: v.threshold,
        delta_lower_bound: v.delta_lower_bound,
        constructed: true,
        continuity_gap,
        min_margin: margins.min_margin,
        margin_at_s: margins.at_s,
        evaluated: margins.evaluated,
        skipped: margins.skipped,
        ode_pass: margins.passed,
        integral_numeric: integral.numeric,
        integral_bound: integral.bound,
        integral_pass: integral.holds,
        pass: continuity_pass && margins.passed && integral.holds,
        error: (!continuity_pass).then(|| format!("phi jumps by {continuity_gap} at xi/gamma")),
        scan: margins.scan,
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

fn lemma_csv(rows: &[LemmaRow]) -> String {
    let mut out = String::from(
        "index,dim,alpha,f0,radius,rho,xi,delta,gamma,threshold,delta_lower_bound,constructed,continuity_gap,\
         min_margin,margin_at_s,evaluated,skipped,ode_pass,integral_numeric,integral_bound,integral_pass,pass,error\n",
    );
    for r in rows {
        let t = &r.tuple;
        let cells = [
            r.index.to_string(),
            t.dim.to_string(),
            fmt_f64(t.alpha),
            fmt_f64(t.f0),
            fmt_f64(t.radius),
            fmt_f64(t.rho),
            fmt_f64(t.xi),
            fmt_f64(t.delta),
            fmt_f64(t.gamma),
            fmt_f64(r.threshold),
            fmt_f64(r.delta_lower_bound),
            r.constructed.to_string(),
            fmt_f64(r.continuity_gap),
            fmt_f64(r.min_margin),
            fmt_f64(r.margin_at_s),
            r.evaluated.to_string(),
            r.skipped.to_string(),
            r.ode_pass.to_string(),
            fmt_f64(r.integral_numeric),
            fmt_f64(r.integral_bound),
            r.integral_pass.to_string(),
            r.pass.to_string(),
            quote(r.error.as_deref().unwrap_or("")),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Serialize)]
struct LemmaSummary<'a> {
    tuples: usize,
    passed: usize,
    failing: Vec<usize>,
    rows: &'a [LemmaRow],
}

/// Checks every tuple of the grid; `Check` when any of them fails.
pub fn cmd_verify_lemmas(config: &RunConfig, out_dir: &Path) -> Result<Vec<LemmaRow>, LabError> {
    let v = config.validated()?;
    if !v.feasible && config.lemmas.grid.is_none() {
        return Err(LabError::Infeasible(format!(
            "f0 = {} does not exceed the threshold {}",
            config.system.f0, v.threshold
        )));
    }
    let grid = lemma_grid(config)?;
    let mut out = open_output(out_dir)?;
    let rows: Vec<LemmaRow> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &t)| verify_tuple(i, t, config))
        .collect();
    let result = write_lemmas(&mut out, config, &rows);
    let failing: Vec<usize> = rows.iter().filter(|r| !r.pass).map(|r| r.index).collect();
    let summary = LemmaSummary {
        tuples: rows.len(),
        passed: rows.len() - failing.len(),
        failing: failing.clone(),
        rows: &rows,
    };
    let result = result.and_then(|()| {
        if failing.is_empty() {
            Ok(())
        } else {
            Err(LabError::Check(format!("{} of {} tuples fail: {failing:?}", failing.len(), rows.len())))
        }
    });
    finish(out, "verify-lemmas", result, &summary)?;
    Ok(rows)
}

fn write_lemmas(out: &mut OutputDir, config: &RunConfig, rows: &[LemmaRow]) -> Result<(), LabError> {
    out.write("lemma_checks.csv", lemma_csv(rows).as_bytes())?;
    for r in rows {
        let keep = match config.lemmas.scan_files {
            ScanFiles::None => false,
            ScanFiles::FirstAndFailing => r.index == 0 || !r.pass,
            ScanFiles::All => true,
        };
        if keep && !r.scan.is_empty() {
            let text = csv(&["s", "margin"], r.scan.iter().map(|&(s, m)| [s, m]));
            out.write(&format!("margins/tuple_{:03}.csv", r.index), text.as_bytes())?;
        }
    }
    Ok(())
}
