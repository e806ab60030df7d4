//! Runs over a decreasing list of cut-off parameters on one mesh.
//!
//! All runs of a sweep take the same time steps, derived from the a-priori
//! speed bound `χ_ε (cap + nF)` and the smallest `ε`. The discrete scheme is
//! order preserving and monotone in `χ_ε`, so with identical steps the
//! ordering `W^ε ≤ W^ε'` for `ε' < ε` holds exactly up to rounding.

use alloc::format;
use alloc::vec::Vec;

use super::{solve_regularized, Problem, SolverConfig, SolverError, StepControl, Trajectory};
use crate::signal::CutoffSpec;
use crate::transform::MassFunction;

/// Step size that satisfies the Courant bound for every state below the cap
/// and every `ε` in `eps_list`.
pub fn shared_uniform_dt(
    problem: &Problem,
    nodes: &[f64],
    cap: f64,
    eps_list: &[f64],
    config: &SolverConfig,
) -> Result<f64, SolverError> {
    let n_f = problem.n_f(nodes);
    let bound = cap * (1.0 + config.tolerances.cap);
    let mut dt = config.dt_max;
    for &eps in eps_list {
        let cutoff = CutoffSpec::new(eps)?;
        for i in 1..nodes.len() - 1 {
            let speed = cutoff.value(nodes[i]) * (bound + n_f[i]);
            if speed > 0.0 {
                dt = dt.min(config.cfl_safety * (nodes[i + 1] - nodes[i]) / speed);
            }
        }
    }
    Ok(dt)
}

/// One configuration per `ε`, sharing output times and step sizes.
pub fn sweep_plan(
    problem: &Problem,
    w0: &MassFunction,
    base: &SolverConfig,
    eps_list: &[f64],
) -> Result<Vec<SolverConfig>, SolverError> {
    if eps_list.is_empty() {
        return Err(SolverError::Config("eps_list is empty".into()));
    }
    if let Some(&bad) = eps_list.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
        return Err(SolverError::Config(format!("every epsilon must lie in (0, 1) (got {bad})")));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(SolverError::Config("eps_list must be strictly decreasing".into()));
    }
    let step_control = match base.step_control {
        StepControl::Uniform { dt } => StepControl::Uniform { dt },
        StepControl::Adaptive => StepControl::Uniform {
            dt: shared_uniform_dt(problem, w0.nodes(), w0.cap(), eps_list, base)?,
        },
    };
    Ok(eps_list
        .iter()
        .map(|&epsilon| SolverConfig {
            epsilon,
            step_control,
            ..base.clone()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    pub epsilon: f64,
    pub result: Result<Trajectory, SolverError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub runs: Vec<SweepRun>,
    pub report: MonotonicityReport,
}

/// Largest decrease `W^ε(s,t) - W^ε'(s,t)`, `ε' < ε`, between two runs.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PairReport {
    pub eps_coarse: f64,
    pub eps_fine: f64,
    pub shared_times: usize,
    /// `max (W^coarse - W^fine)`, positive when monotonicity fails.
    pub max_violation: f64,
    pub at_time: f64,
    pub at_s: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MonotonicityReport {
    pub pairs: Vec<PairReport>,
    /// Maximum over all pairs; `0` when there is nothing to compare.
    pub max_violation: f64,
}

impl MonotonicityReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }
}

/// Compares consecutive runs, ordered by decreasing `ε`, at their shared
/// output times. Runs must share the mesh.
pub fn monotonicity_report(runs: &[&Trajectory]) -> Result<MonotonicityReport, SolverError> {
    let mut report = MonotonicityReport::default();
    for pair in runs.windows(2) {
        let (coarse, fine) = (pair[0], pair[1]);
        if coarse.nodes() != fine.nodes() {
            return Err(SolverError::Config(format!(
                "runs at epsilon {} and {} use different meshes",
                coarse.epsilon(),
                fine.epsilon()
            )));
        }
        let mut pr = PairReport {
            eps_coarse: coarse.epsilon(),
            eps_fine: fine.epsilon(),
            shared_times: 0,
            max_violation: f64::NEG_INFINITY,
            at_time: 0.0,
            at_s: 0.0,
        };
        for a in &coarse.snapshots {
            let Some(b) = fine.at_time(a.time()) else { continue };
            pr.shared_times += 1;
            for (i, (&u, &v)) in a.values().iter().zip(b.values()).enumerate() {
                if u - v > pr.max_violation {
                    pr.max_violation = u - v;
                    pr.at_time = a.time();
                    pr.at_s = a.nodes()[i];
                }
            }
        }
        if pr.shared_times > 0 {
            report.max_violation = report.max_violation.max(pr.max_violation);
        }
        report.pairs.push(pr);
    }
    Ok(report)
}

/// Runs every `ε` in turn (see [`sweep_plan`]); failed runs are kept as errors.
pub fn proper_sweep(
    problem: &Problem,
    w0: &MassFunction,
    base: &SolverConfig,
    eps_list: &[f64],
) -> Result<Sweep, SolverError> {
    let plan = sweep_plan(problem, w0, base, eps_list)?;
    let runs: Vec<SweepRun> = plan
        .iter()
        .map(|cfg| SweepRun {
            epsilon: cfg.epsilon,
            result: solve_regularized(problem, w0, cfg),
        })
        .collect();
    let ok: Vec<&Trajectory> = runs.iter().filter_map(|r| r.result.as_ref().ok()).collect();
    let report = monotonicity_report(&ok)?;
    Ok(Sweep { runs, report })
}
