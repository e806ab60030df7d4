use std::path::Path;

use kslab_core::solver::solve_regularized;
use serde::Serialize;

use super::{finish, initial_state, open_output, parallel_sweep, run_dir, write_run};
use crate::config::RunConfig;
use crate::error::LabError;
use crate::output::OutputDir;

#[derive(Debug, Serialize)]
struct SweepSummary<'a> {
    eps_list: &'a [f64],
    monotonicity: &'a kslab_core::solver::MonotonicityReport,
    runs: Vec<RunSummary>,
}

#[derive(Debug, Serialize)]
struct RunSummary {
    epsilon: f64,
    directory: String,
    error: Option<String>,
}

/// Runs one cut-off problem, or a sweep when `solver.eps_list` is set.
pub fn cmd_simulate(config: &RunConfig, out_dir: &Path) -> Result<(), LabError> {
    let mut out = open_output(out_dir)?;
    let result = simulate(config, &mut out);
    finish(out, "simulate", result, config)
}

fn simulate(config: &RunConfig, out: &mut OutputDir) -> Result<(), LabError> {
    config.validated()?;
    let mesh = config.build_mesh()?;
    let w0 = initial_state(config, &mesh)?;
    let problem = config.problem()?;
    let base = config.solver.base_config();
    let betas = &config.blowup.betas;
    match &config.solver.eps_list {
        None => {
            let traj = solve_regularized(&problem, &w0, &base).map_err(|e| LabError::Solver(e.to_string()))?;
            write_run(out, "", &traj, betas)?;
            Ok(())
        }
        Some(eps_list) => {
            let sweep = parallel_sweep(&problem, &w0, &base, eps_list)?;
            let mut runs = Vec::new();
            let mut failure = None;
            for (eps, r) in &sweep.runs {
                let dir = run_dir(*eps);
                match r {
                    Ok(traj) => {
                        write_run(out, &format!("{dir}/"), traj, betas)?;
                    }
                    Err(e) => failure = failure.or(Some(format!("run at epsilon {eps} failed: {e}"))),
                }
                runs.push(RunSummary {
                    epsilon: *eps,
                    directory: dir,
                    error: r.as_ref().err().cloned(),
                });
            }
            out.write_json(
                "sweep_report.json",
                &SweepSummary {
                    eps_list,
                    monotonicity: &sweep.report,
                    runs,
                },
            )?;
            match failure {
                Some(msg) => Err(LabError::Solver(msg)),
                None => Ok(()),
            }
        }
    }
}
