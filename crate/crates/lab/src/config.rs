//! Run configuration, read from a TOML document with strict key checking.

use std::path::{Path, PathBuf};

use kslab_core::solver::{Advection, Problem, SolverConfig, StepControl, Tolerances};
use kslab_core::{
    build_mesh, BridgeKind, Breakpoints, Mesh, RadialDensity, SignalProfile, SystemParams, ValidatedParams,
};
use serde::{Deserialize, Serialize};

use crate::error::LabError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemParams,
    #[serde(default)]
    pub signal: SignalSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub mesh: MeshSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub test_function: TestFunctionSection,
    #[serde(default)]
    pub lemmas: LemmaSection,
    #[serde(default)]
    pub blowup: BlowupSection,
    #[serde(default)]
    pub residual: ResidualSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalSection {
    pub bridge: BridgeKind,
    pub breakpoints: Breakpoints,
}

/// Initial density; the default is the plateau `c0` from `[system]` on the unit ball.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    pub density: Option<RadialDensity>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSection {
    pub s_max: f64,
    pub cells: usize,
    pub ratio: f64,
}

impl Default for MeshSection {
    fn default() -> Self {
        MeshSection {
            s_max: 4.0,
            cells: 512,
            ratio: 1.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub epsilon: f64,
    /// Cut-off parameters of a sweep, strictly decreasing; replaces `epsilon`.
    pub eps_list: Option<Vec<f64>>,
    pub t_end: f64,
    /// Explicit snapshot times in `(0, t_end]`.
    pub output_times: Option<Vec<f64>>,
    /// Evenly spaced snapshots `k t_end / output_count`, used without `output_times`.
    pub output_count: usize,
    pub dt_max: f64,
    pub cfl_safety: f64,
    pub advection: Advection,
    pub step_control: StepControl,
    pub tolerances: Tolerances,
    pub max_steps: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let base = SolverConfig::new(1e-3, 0.05);
        SolverSection {
            epsilon: base.epsilon,
            eps_list: None,
            t_end: base.t_end,
            output_times: None,
            output_count: 50,
            dt_max: base.dt_max,
            cfl_safety: base.cfl_safety,
            advection: base.advection,
            step_control: base.step_control,
            tolerances: base.tolerances,
            max_steps: base.max_steps,
        }
    }
}

impl SolverSection {
    pub fn output_times(&self) -> Vec<f64> {
        match &self.output_times {
            Some(t) => t.clone(),
            None => evenly_spaced(self.t_end, self.output_count),
        }
    }

    /// Core configuration for one `ε`, with an explicit end time.
    pub fn to_config(&self, epsilon: f64, t_end: f64, output_times: Vec<f64>) -> SolverConfig {
        SolverConfig {
            epsilon,
            t_end,
            output_times,
            dt_max: self.dt_max,
            cfl_safety: self.cfl_safety,
            advection: self.advection,
            step_control: self.step_control,
            tolerances: self.tolerances,
            max_steps: self.max_steps,
        }
    }

    pub fn base_config(&self) -> SolverConfig {
        self.to_config(self.epsilon, self.t_end, self.output_times())
    }
}

/// `k t_end / count` for `k = 1..=count`.
pub fn evenly_spaced(t_end: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|k| k as f64 * t_end / count as f64).collect()
}

/// Test-function parameters; unset values take the documented defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestFunctionSection {
    pub xi: f64,
    /// Defaults to the midpoint between the lower bound and 1.
    pub delta: Option<f64>,
    /// Used by `verify-lemmas` for the scenario tuple; defaults to `2 · 4/(R - ρ)`.
    pub gamma: Option<f64>,
}

impl Default for TestFunctionSection {
    fn default() -> Self {
        TestFunctionSection {
            xi: 4.0,
            delta: None,
            gamma: None,
        }
    }
}

/// One point of the lemma grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaTuple {
    pub dim: u32,
    pub alpha: f64,
    pub f0: f64,
    pub radius: f64,
    pub rho: f64,
    pub xi: f64,
    pub delta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanFiles {
    None,
    /// The first tuple and every failing one.
    #[default]
    FirstAndFailing,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaSection {
    /// Explicit tuples; when absent the built-in grid of 100 tuples around
    /// `[system]` is used.
    pub grid: Option<Vec<LemmaTuple>>,
    pub points: usize,
    pub s_min: f64,
    pub s_max: f64,
    pub breakpoints: Breakpoints,
    pub scan_files: ScanFiles,
}

impl Default for LemmaSection {
    fn default() -> Self {
        LemmaSection {
            grid: None,
            points: 10_000,
            s_min: 1e-8,
            s_max: 10.0,
            breakpoints: Breakpoints::LiteralS,
            scan_files: ScanFiles::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlowupSection {
    pub t0: f64,
    pub eta: f64,
    /// Cut-off parameters of the sweep, strictly decreasing.
    pub eps_list: Vec<f64>,
    pub betas: Vec<f64>,
    /// Replaces the measured subsolution constant.
    pub c_sub: Option<f64>,
    pub gamma_cap: f64,
    /// Time at which the slope trend is reported.
    pub probe_time: f64,
    /// Snapshot spacing of the sweep runs.
    pub output_spacing: f64,
    /// Relative slack of the solver-coupled checks.
    pub tolerance: f64,
}

impl Default for BlowupSection {
    fn default() -> Self {
        BlowupSection {
            t0: 0.0,
            eta: 0.1,
            eps_list: vec![1e-2, 1e-3, 1e-4],
            betas: vec![1.0, 1.5, 2.0],
            c_sub: None,
            gamma_cap: kslab_core::analysis::SelectionInputs::DEFAULT_GAMMA_CAP,
            probe_time: 0.01,
            output_spacing: 1e-3,
            tolerance: 1e-6,
        }
    }
}

/// A spatial bump of the residual study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub center: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResidualSection {
    /// Spatial bumps; the built-in library is used when absent.
    pub fields: Option<Vec<FieldSpec>>,
    pub advection: Advection,
    /// Field of the constant-state check (must sit where `F` is constant).
    pub constant_field: FieldSpec,
    pub min_order: f64,
    pub constant_tolerance: f64,
}

impl Default for ResidualSection {
    fn default() -> Self {
        ResidualSection {
            fields: None,
            advection: Advection::Minmod,
            constant_field: FieldSpec {
                center: 1.0,
                half_width: 0.5,
            },
            min_order: 1.0,
            constant_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, LabError> {
        toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, LabError> {
        toml::to_string(self).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn validated(&self) -> Result<ValidatedParams, LabError> {
        self.system.validate().map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn signal_profile(&self) -> Result<SignalProfile, LabError> {
        SignalProfile::with_options(&self.system, self.signal.bridge, self.signal.breakpoints)
            .map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn problem(&self) -> Result<Problem, LabError> {
        Ok(Problem::new(self.signal_profile()?))
    }

    pub fn build_mesh(&self) -> Result<Mesh, LabError> {
        build_mesh(self.mesh.s_max, self.mesh.cells, self.mesh.ratio).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn density(&self) -> RadialDensity {
        self.initial
            .density
            .clone()
            .unwrap_or_else(|| RadialDensity::unit_plateau(self.system.c0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCENARIO: &str = r#"
[system]
dim = 3
alpha = 2.5
f0 = 2.0
radius = 0.5
rho = 0.1
c0 = 1.0
"#;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::from_toml(SCENARIO).unwrap();
        assert_eq!(c.mesh.cells, 512);
        assert_eq!(c.solver.output_times().len(), 50);
        assert_eq!(c.lemmas.breakpoints, Breakpoints::LiteralS);
        assert_eq!(c.blowup.eps_list, vec![1e-2, 1e-3, 1e-4]);
        assert_eq!(c.density(), RadialDensity::unit_plateau(1.0));
    }

    #[test]
    fn round_trip() {
        let mut c = RunConfig::from_toml(SCENARIO).unwrap();
        c.solver.eps_list = Some(vec![1e-2, 1e-3]);
        c.solver.step_control = StepControl::Uniform { dt: 1e-6 };
        c.test_function.delta = Some(0.8);
        c.initial.density = Some(RadialDensity::Tabulated {
            r: vec![0.0, 0.5, 1.0],
            u: vec![1.0, 0.7, 0.1],
        });
        c.lemmas.grid = Some(vec![LemmaTuple {
            dim: 3,
            alpha: 2.5,
            f0: 2.0,
            radius: 0.5,
            rho: 0.1,
            xi: 4.0,
            delta: 0.8,
            gamma: 0.1 + 1.0 / 3.0,
        }]);
        let back = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_and_missing_keys_rejected() {
        let extra = format!("{SCENARIO}colour = 3\n");
        assert!(RunConfig::from_toml(&extra).is_err());
        let nested = format!("{SCENARIO}[mesh]\ncels = 3\n");
        assert!(RunConfig::from_toml(&nested).is_err());
        let missing = SCENARIO.replace("alpha = 2.5\n", "");
        assert!(RunConfig::from_toml(&missing).is_err());
    }
}
