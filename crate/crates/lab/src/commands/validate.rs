use kslab_core::ValidatedParams;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::LabError;

/// What `validate` prints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub threshold: f64,
    pub delta_lower_bound: f64,
    pub feasible: bool,
    pub mass_cap: f64,
    pub default_delta: Option<f64>,
    pub gamma_floor: f64,
}

impl From<&ValidatedParams> for FeasibilityReport {
    fn from(v: &ValidatedParams) -> Self {
        FeasibilityReport {
            threshold: v.threshold,
            delta_lower_bound: v.delta_lower_bound,
            feasible: v.feasible,
            mass_cap: v.mass_cap(),
            default_delta: v.default_delta(),
            gamma_floor: v.gamma_floor(),
        }
    }
}

/// Checks the parameters; `Infeasible` when `f0` does not exceed the threshold.
pub fn cmd_validate(config: &RunConfig) -> Result<FeasibilityReport, LabError> {
    let v = config.validated()?;
    let report = FeasibilityReport::from(&v);
    println!("f0 threshold        {}", report.threshold);
    println!("f0                  {}", config.system.f0);
    println!("delta lower bound   {}", report.delta_lower_bound);
    println!("mass cap            {}", report.mass_cap);
    println!("gamma floor         {}", report.gamma_floor);
    if !report.feasible {
        return Err(LabError::Infeasible(format!(
            "f0 = {} does not exceed the threshold {}",
            config.system.f0, report.threshold
        )));
    }
    println!("feasible");
    Ok(report)
}
