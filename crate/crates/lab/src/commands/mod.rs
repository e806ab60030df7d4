//! The subcommands. Each `cmd_*` writes its files below the output directory,
//! finishes with a manifest, and maps failures to a [`LabError`].

mod blowup;
mod lemmas;
mod residual;
mod simulate;
mod validate;

use std::path::Path;

use kslab_core::analysis::{blowup_indicator, BlowupReport};
use kslab_core::solver::{monotonicity_report, solve_regularized, sweep_plan, MonotonicityReport, Problem, SolverConfig, Trajectory};
use kslab_core::{w0_from_density, MassFunction, Mesh};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::LabError;
use crate::output::{csv, snapshot_csv, snapshot_name, OutputDir, Status};

pub use blowup::{blowup_pipeline, cmd_blowup, merge_times, BlowupOutcome, SlopeTrend};
pub use lemmas::{cmd_verify_lemmas, default_grid, lemma_grid, verify_tuple, LemmaRow};
pub use residual::{cmd_weak_residual, residual_study, FieldResult, ResidualStudy};
pub use simulate::cmd_simulate;
pub use validate::{cmd_validate, FeasibilityReport};

/// Runs of a sweep, in the order of the cut-off list.
#[derive(Debug)]
pub struct SweepOutcome {
    pub runs: Vec<(f64, Result<Trajectory, String>)>,
    pub report: MonotonicityReport,
}

impl SweepOutcome {
    pub fn trajectories(&self) -> Result<Vec<&Trajectory>, LabError> {
        self.runs
            .iter()
            .map(|(eps, r)| {
                r.as_ref()
                    .map_err(|e| LabError::Solver(format!("run at epsilon {eps} failed: {e}")))
            })
            .collect()
    }
}

/// The sweep of [`kslab_core::solver::proper_sweep`] with the runs executed in
/// parallel on the current rayon pool.
pub fn parallel_sweep(
    problem: &Problem,
    w0: &MassFunction,
    base: &SolverConfig,
    eps_list: &[f64],
) -> Result<SweepOutcome, LabError> {
    let plan = sweep_plan(problem, w0, base, eps_list).map_err(|e| LabError::Config(e.to_string()))?;
    let runs: Vec<(f64, Result<Trajectory, String>)> = plan
        .par_iter()
        .map(|cfg| (cfg.epsilon, solve_regularized(problem, w0, cfg).map_err(|e| e.to_string())))
        .collect();
    let ok: Vec<&Trajectory> = runs.iter().filter_map(|(_, r)| r.as_ref().ok()).collect();
    let report = monotonicity_report(&ok).map_err(|e| LabError::Solver(e.to_string()))?;
    Ok(SweepOutcome { runs, report })
}

pub fn initial_state(config: &RunConfig, mesh: &Mesh) -> Result<MassFunction, LabError> {
    w0_from_density(&config.density(), config.system.dim, mesh).map_err(|e| LabError::Config(e.to_string()))
}

/// Directory name of one sweep member.
pub fn run_dir(epsilon: f64) -> String {
    format!("run_eps{epsilon:.3e}")
}

/// `t, sup W/s^β..., lipschitz, atom` for every snapshot.
pub fn indicators_csv(report: &BlowupReport) -> String {
    let mut header = vec!["t".to_string()];
    header.extend(report.betas.iter().map(|b| format!("sup_beta_{}", b.beta)));
    header.push("lipschitz".into());
    header.push("atom".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    csv(
        &header,
        report.series.iter().map(|s| {
            let mut row = vec![s.time];
            row.extend(&s.sup);
            row.push(s.lipschitz);
            row.push(s.atom);
            row
        }),
    )
}

/// Snapshots, indicators and run statistics of one trajectory under `prefix`.
pub fn write_run(out: &mut OutputDir, prefix: &str, traj: &Trajectory, betas: &[f64]) -> Result<BlowupReport, LabError> {
    for snap in &traj.snapshots {
        out.write(&format!("{prefix}{}", snapshot_name(snap.time())), snapshot_csv(snap).as_bytes())?;
    }
    let report = blowup_indicator(traj, betas).map_err(|e| LabError::Config(e.to_string()))?;
    out.write(&format!("{prefix}indicators.csv"), indicators_csv(&report).as_bytes())?;
    out.write_json(&format!("{prefix}run_stats.json"), &traj.stats)?;
    Ok(report)
}

/// Finishes the manifest with the outcome of `result` and passes it on.
pub fn finish<T, D: Serialize>(out: OutputDir, command: &str, result: Result<T, LabError>, details: &D) -> Result<T, LabError> {
    let status = match &result {
        Ok(_) => Status::Ok,
        Err(e) => Status::Failed {
            exit_code: e.exit_code() as i32,
            message: e.to_string(),
        },
    };
    out.finish(command, &status, details)?;
    result
}

pub fn open_output(dir: &Path) -> Result<OutputDir, LabError> {
    OutputDir::create(dir)
}
