use std::path::Path;

use kslab_core::analysis::{constant_state, field_library, weak_residual, ResidualTerms, TensorBump};
use kslab_core::solver::{shared_uniform_dt, solve_regularized, Advection, Problem, StepControl, Trajectory};
use kslab_core::Mesh;
use serde::Serialize;

use super::{finish, initial_state, open_output};
use crate::config::{evenly_spaced, RunConfig};
use crate::error::LabError;
use crate::output::{csv, OutputDir};

/// Residual of one test field on the coarse and the refined run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldResult {
    pub field: TensorBump,
    pub coarse: ResidualTerms,
    pub fine: ResidualTerms,
    /// `log2(coarse/fine)`.
    pub order: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualStudy {
    pub epsilon: f64,
    pub t_end: f64,
    pub advection: Advection,
    pub coarse_cells: usize,
    pub fine_cells: usize,
    pub coarse_dt: f64,
    pub fine_dt: f64,
    pub min_order: f64,
    pub fields: Vec<FieldResult>,
    pub constant_field: TensorBump,
    pub constant: ResidualTerms,
    pub constant_relative: f64,
    pub constant_passed: bool,
    pub passed: bool,
}

fn run(config: &RunConfig, problem: &Problem, mesh: &Mesh, dt: f64, outputs: usize) -> Result<Trajectory, LabError> {
    let w0 = initial_state(config, mesh)?;
    let s = &config.solver;
    let mut cfg = s.to_config(s.epsilon, s.t_end, evenly_spaced(s.t_end, outputs));
    cfg.advection = config.residual.advection;
    cfg.step_control = StepControl::Uniform { dt };
    solve_regularized(problem, &w0, &cfg).map_err(|e| LabError::Solver(e.to_string()))
}

/// The weak-form residual on the configured run and on a run with twice the
/// cells, half the step and twice the snapshots, plus the constant-state check.
pub fn residual_study(config: &RunConfig) -> Result<ResidualStudy, LabError> {
    config.validated()?;
    let s = &config.solver;
    let r = &config.residual;
    let problem = config.problem()?;
    let mesh = config.build_mesh()?;
    let w0 = initial_state(config, &mesh)?;
    let dt = match s.step_control {
        StepControl::Uniform { dt } => dt,
        StepControl::Adaptive => shared_uniform_dt(&problem, mesh.nodes(), w0.cap(), &[s.epsilon], &s.base_config())
            .map_err(|e| LabError::Config(e.to_string()))?,
    };
    let fine_mesh = mesh.refine();
    let coarse = run(config, &problem, &mesh, dt, s.output_count)?;
    let fine = run(config, &problem, &fine_mesh, 0.5 * dt, 2 * s.output_count)?;

    let fields: Vec<TensorBump> = match &r.fields {
        Some(f) => f
            .iter()
            .map(|f| TensorBump::new(f.center, f.half_width, s.t_end))
            .collect::<Result<_, _>>()
            .map_err(|e| LabError::Config(e.to_string()))?,
        None => field_library(s.t_end).map_err(|e| LabError::Config(e.to_string()))?.to_vec(),
    };
    let mut results = Vec::with_capacity(fields.len());
    for field in fields {
        let rc = weak_residual(&coarse, &problem, &field).map_err(|e| LabError::Config(e.to_string()))?;
        let rf = weak_residual(&fine, &problem, &field).map_err(|e| LabError::Config(e.to_string()))?;
        let order = (rc.residual / rf.residual).log2();
        results.push(FieldResult {
            field,
            coarse: rc,
            fine: rf,
            order,
            passed: order >= r.min_order,
        });
    }

    let constant_field = TensorBump::new(r.constant_field.center, r.constant_field.half_width, s.t_end)
        .map_err(|e| LabError::Config(e.to_string()))?;
    let steady = constant_state(mesh.shared_nodes(), w0.cap(), &coarse.times(), config.system.dim, s.epsilon)
        .map_err(|e| LabError::Config(e.to_string()))?;
    let constant = weak_residual(&steady, &problem, &constant_field).map_err(|e| LabError::Config(e.to_string()))?;
    let constant_relative = constant.relative();
    let constant_passed = constant.residual <= r.constant_tolerance * constant.scale;
    let passed = constant_passed && results.iter().all(|f| f.passed);
    Ok(ResidualStudy {
        epsilon: s.epsilon,
        t_end: s.t_end,
        advection: r.advection,
        coarse_cells: mesh.cells(),
        fine_cells: fine_mesh.cells(),
        coarse_dt: dt,
        fine_dt: 0.5 * dt,
        min_order: r.min_order,
        fields: results,
        constant_field,
        constant,
        constant_relative,
        constant_passed,
        passed,
    })
}

/// Runs [`residual_study`] and writes `residual_report.json` and
/// `residual.csv`; `Check` when an order or the constant state fails.
pub fn cmd_weak_residual(config: &RunConfig, out_dir: &Path) -> Result<ResidualStudy, LabError> {
    let mut out = open_output(out_dir)?;
    let result = residual_study(config).and_then(|st| write_residual(&mut out, &st).map(|()| st));
    let result = result.and_then(|st| {
        if st.passed {
            Ok(st)
        } else {
            let low: Vec<String> = st
                .fields
                .iter()
                .filter(|f| !f.passed)
                .map(|f| format!("field at {} has order {}", f.field.center, f.order))
                .collect();
            let mut msg = low.join("; ");
            if !st.constant_passed {
                if !msg.is_empty() {
                    msg.push_str("; ");
                }
                msg.push_str(&format!("constant-state residual {} of scale", st.constant_relative));
            }
            Err(LabError::Check(msg))
        }
    });
    let details = serde_json::json!({ "config": config });
    finish(out, "weak-residual", result, &details)
}

fn write_residual(out: &mut OutputDir, st: &ResidualStudy) -> Result<(), LabError> {
    out.write_json("residual_report.json", st)?;
    let rows = st.fields.iter().map(|f| {
        [
            f.field.center,
            f.field.half_width,
            f.coarse.residual,
            f.fine.residual,
            f.order,
            f.coarse.relative(),
            f.fine.relative(),
        ]
    });
    let header = ["center", "half_width", "coarse", "fine", "order", "coarse_relative", "fine_relative"];
    out.write("residual.csv", csv(&header, rows).as_bytes())
}
