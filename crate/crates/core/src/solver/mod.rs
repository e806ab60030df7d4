//! IMEX finite-difference solver for the cut-off problem
//!
//! ```text
//! W_t = n² s^((2n-2)/n) W_ss + χ_ε(s) (W + n F(s)) W_s   on (0, s_max)
//! W(0, t) = 0,  W(s_max, t) = cap
//! ```
//!
//! Diffusion is implicit (one tridiagonal solve per step), transport is
//! explicit and upwinded from the right since its speed `χ_ε (W + nF)` is
//! non-negative. With `dt · speed / Δs <= 1` the explicit part is a convex
//! combination of neighbours and the implicit part is an M-matrix inverse, so
//! every step preserves `0 <= W <= cap`, monotonicity in `s`, and the
//! pointwise ordering of two solutions. Any violation is reported as an error
//! instead of being repaired.

mod compare;
mod sweep;
pub mod tridiag;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::math::powf;
use crate::signal::{CutoffSpec, SignalError, SignalProfile};
use crate::transform::MassFunction;

pub use crate::mesh::{build_mesh, Mesh, MeshError};
pub use compare::{comparison_check, measure_c_sub, ComparisonKind, ComparisonReport, Subsolution};
pub use sweep::{monotonicity_report, proper_sweep, shared_uniform_dt, sweep_plan, MonotonicityReport, PairReport, Sweep, SweepRun};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("signal: {0}")]
    Signal(#[from] SignalError),
    #[error("time step underflow at t = {time}: dt = {dt:e}")]
    StepUnderflow { time: f64, dt: f64 },
    #[error("step limit {0} reached")]
    StepLimit(usize),
    #[error("{kind} violated at t = {time} (step {step}), node {index} (s = {s}): {value:e}")]
    Invariant {
        kind: InvariantKind,
        time: f64,
        step: usize,
        index: usize,
        s: f64,
        value: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvariantKind {
    Positivity,
    MassCap,
    Monotonicity,
    Courant,
}

impl core::fmt::Display for InvariantKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            InvariantKind::Positivity => "positivity",
            InvariantKind::MassCap => "mass cap",
            InvariantKind::Monotonicity => "monotonicity",
            InvariantKind::Courant => "Courant bound",
        })
    }
}

/// Discretisation of the transport term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Advection {
    /// First-order one-sided difference toward larger `s`.
    #[default]
    Upwind,
    /// Second-order one-sided difference with a minmod limiter.
    Minmod,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields))]
pub enum StepControl {
    /// `dt = cfl · min Δs/speed`, recomputed every step.
    #[default]
    Adaptive,
    /// Equal steps no longer than `dt` between consecutive output times.
    Uniform { dt: f64 },
}

/// Relative tolerances for the per-step invariant checks.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Tolerances {
    /// `max W <= cap (1 + cap)`.
    pub cap: f64,
    /// `min (W_{i+1} - W_i) >= -monotone · cap`.
    pub monotone: f64,
    /// Smallest admissible adaptive step.
    pub dt_min: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            cap: 1e-8,
            monotone: 1e-8,
            dt_min: 1e-14,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Cut-off parameter of `χ_ε`.
    pub epsilon: f64,
    pub t_end: f64,
    /// Snapshot times in `(0, t_end]`; `0` and `t_end` are always added.
    pub output_times: Vec<f64>,
    /// Upper bound on every step.
    pub dt_max: f64,
    pub cfl_safety: f64,
    pub advection: Advection,
    pub step_control: StepControl,
    pub tolerances: Tolerances,
    pub max_steps: usize,
}

impl SolverConfig {
    pub fn new(epsilon: f64, t_end: f64) -> Self {
        SolverConfig {
            epsilon,
            t_end,
            output_times: Vec::new(),
            dt_max: 1e-3,
            cfl_safety: 0.4,
            advection: Advection::Upwind,
            step_control: StepControl::Adaptive,
            tolerances: Tolerances::default(),
            max_steps: 100_000_000,
        }
    }

    /// `0`, the requested times, and `t_end`, sorted and deduplicated.
    pub fn snapshot_times(&self) -> Result<Vec<f64>, SolverError> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(SolverError::Config(alloc::format!("t_end must be positive (got {})", self.t_end)));
        }
        let mut times = vec![0.0];
        let mut requested = self.output_times.clone();
        requested.sort_by(f64::total_cmp);
        for t in requested {
            if !(t > 0.0 && t <= self.t_end) {
                return Err(SolverError::Config(alloc::format!(
                    "output time {t} outside (0, t_end = {}]",
                    self.t_end
                )));
            }
            if t > times[times.len() - 1] {
                times.push(t);
            }
        }
        if times[times.len() - 1] < self.t_end {
            times.push(self.t_end);
        }
        Ok(times)
    }

    fn validate(&self, nodes: &[f64]) -> Result<(), SolverError> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(SolverError::Config(alloc::format!("epsilon must lie in (0, 1) (got {})", self.epsilon)));
        }
        if self.epsilon < 2.0 * nodes[1] {
            return Err(SolverError::Config(alloc::format!(
                "epsilon = {} is not resolved by the mesh: need epsilon >= 2 s_1 = {}",
                self.epsilon,
                2.0 * nodes[1]
            )));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety < 1.0) {
            return Err(SolverError::Config(alloc::format!("cfl_safety must lie in (0, 1) (got {})", self.cfl_safety)));
        }
        if !(self.dt_max > 0.0) {
            return Err(SolverError::Config(alloc::format!("dt_max must be positive (got {})", self.dt_max)));
        }
        if let StepControl::Uniform { dt } = self.step_control {
            if !(dt > 0.0) {
                return Err(SolverError::Config(alloc::format!("uniform dt must be positive (got {dt})")));
            }
        }
        Ok(())
    }
}

/// The equation: dimension and signal production (`None` for `f ≡ 0`).
#[derive(Debug, Clone)]
pub struct Problem {
    pub dim: u32,
    pub signal: Option<SignalProfile>,
}

impl Problem {
    pub fn new(signal: SignalProfile) -> Self {
        Problem {
            dim: signal.dim(),
            signal: Some(signal),
        }
    }

    pub fn without_signal(dim: u32) -> Self {
        Problem { dim, signal: None }
    }

    /// `n F(s)` at every node.
    pub fn n_f(&self, nodes: &[f64]) -> Vec<f64> {
        let n = self.dim as f64;
        match &self.signal {
            Some(sig) => nodes.iter().map(|&s| n * sig.integral_unchecked(s)).collect(),
            None => vec![0.0; nodes.len()],
        }
    }
}

/// Step statistics between two consecutive snapshots.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct IntervalStats {
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
    pub dt_min: f64,
    pub dt_max: f64,
}

/// Extremes of the invariant quantities over every step of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct InvariantLog {
    pub min_value: f64,
    /// `max W / cap - 1`.
    pub max_cap_excess: f64,
    /// `min (W_{i+1} - W_i) / cap`.
    pub min_relative_increment: f64,
    /// `max dt · speed / Δs`.
    pub max_courant: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RunStats {
    pub dim: u32,
    pub epsilon: f64,
    pub cells: usize,
    pub s_max: f64,
    pub first_cell: f64,
    pub advection: Advection,
    pub steps: usize,
    pub intervals: Vec<IntervalStats>,
    pub invariants: InvariantLog,
}

/// Snapshots of `W^ε` at the output times of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<MassFunction>,
    pub stats: RunStats,
}

impl Trajectory {
    pub fn epsilon(&self) -> f64 {
        self.stats.epsilon
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|m| m.time()).collect()
    }

    pub fn nodes(&self) -> &[f64] {
        self.snapshots[0].nodes()
    }

    pub fn cap(&self) -> f64 {
        self.snapshots[0].cap()
    }

    /// Wraps externally produced snapshots sharing one mesh; step statistics
    /// are left empty.
    pub fn from_snapshots(dim: u32, epsilon: f64, snapshots: Vec<MassFunction>) -> Result<Self, SolverError> {
        let first = snapshots
            .first()
            .ok_or_else(|| SolverError::Config("a trajectory needs at least one snapshot".into()))?;
        let nodes = first.shared_nodes();
        if snapshots.iter().any(|m| m.nodes() != &nodes[..]) {
            return Err(SolverError::Config("snapshots must share the mesh".into()));
        }
        if snapshots.windows(2).any(|w| !(w[0].time() < w[1].time())) {
            return Err(SolverError::Config("snapshot times must increase".into()));
        }
        let last = nodes.len() - 1;
        Ok(Trajectory {
            stats: RunStats {
                dim,
                epsilon,
                cells: last,
                s_max: nodes[last],
                first_cell: nodes[1],
                advection: Advection::Upwind,
                steps: 0,
                intervals: Vec::new(),
                invariants: InvariantLog {
                    min_value: snapshots.iter().map(|m| m.invariants().min_value).fold(f64::INFINITY, f64::min),
                    max_cap_excess: 0.0,
                    min_relative_increment: 0.0,
                    max_courant: 0.0,
                },
            },
            snapshots,
        })
    }

    pub fn dim(&self) -> u32 {
        self.stats.dim
    }

    /// Snapshot whose time equals `t` to within `1e-12` relative.
    pub fn at_time(&self, t: f64) -> Option<&MassFunction> {
        self.snapshots
            .iter()
            .find(|m| (m.time() - t).abs() <= 1e-12 * t.abs().max(1.0))
    }
}

/// Precomputed per-node coefficients.
struct Coefficients {
    h_plus: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    chi: Vec<f64>,
    n_f: Vec<f64>,
}

impl Coefficients {
    fn new(problem: &Problem, nodes: &[f64], epsilon: f64) -> Result<Self, SolverError> {
        let n = problem.dim as f64;
        let cutoff = CutoffSpec::new(epsilon)?;
        let len = nodes.len();
        let h_plus: Vec<f64> = (0..len).map(|i| if i + 1 < len { nodes[i + 1] - nodes[i] } else { 0.0 }).collect();
        let mut lower = vec![0.0; len];
        let mut upper = vec![0.0; len];
        let exponent = (2.0 * n - 2.0) / n;
        for i in 1..len - 1 {
            let d = n * n * powf(nodes[i], exponent);
            let (hm, hp) = (h_plus[i - 1], h_plus[i]);
            lower[i] = 2.0 * d / ((hm + hp) * hm);
            upper[i] = 2.0 * d / ((hm + hp) * hp);
        }
        Ok(Coefficients {
            h_plus,
            lower,
            upper,
            chi: nodes.iter().map(|&s| cutoff.value(s)).collect(),
            n_f: problem.n_f(nodes),
        })
    }

    /// Largest stable step for the state `w`: `min Δs / speed`.
    fn courant_limit(&self, w: &[f64]) -> f64 {
        let mut limit = f64::INFINITY;
        let interior = 1..w.len() - 1;
        for (((&wi, &chi), &nf), &h) in w[interior.clone()]
            .iter()
            .zip(&self.chi[interior.clone()])
            .zip(&self.n_f[interior.clone()])
            .zip(&self.h_plus[interior])
        {
            let speed = chi * (wi + nf);
            if speed > 0.0 {
                limit = limit.min(h / speed);
            }
        }
        limit
    }
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Integrates the cut-off problem from `w0` and records snapshots.
///
/// The far-field value `w0.cap()` is imposed at `s_max`.
pub fn solve_regularized(problem: &Problem, w0: &MassFunction, config: &SolverConfig) -> Result<Trajectory, SolverError> {
    let nodes = w0.nodes();
    config.validate(nodes)?;
    let times = config.snapshot_times()?;
    let cap = w0.cap();
    let len = nodes.len();
    let last = len - 1;
    // the truncation at s_max must sit well outside the initial support
    if let Some(i) = w0.values().iter().position(|&v| v >= cap * (1.0 - 1e-10)) {
        // the support ends somewhere in (s_{i-1}, s_i]
        let support = nodes[i.max(1) - 1];
        if nodes[last] < 4.0 * support {
            return Err(SolverError::Config(alloc::format!(
                "s_max = {} must be at least four times the support of the initial data ({})",
                nodes[last],
                support
            )));
        }
    }
    let coef = Coefficients::new(problem, nodes, config.epsilon)?;
    let tol = config.tolerances;

    let mut w: Vec<f64> = w0.values().to_vec();
    w[0] = 0.0;
    w[last] = cap;
    let mut rhs = vec![0.0; len - 2];
    let mut sub = vec![0.0; len - 2];
    let mut diag = vec![0.0; len - 2];
    let mut sup = vec![0.0; len - 2];
    let mut scratch = vec![0.0; len - 2];

    let mut snapshots = Vec::with_capacity(times.len());
    snapshots.push(MassFunction::new(w0.shared_nodes(), w.clone(), 0.0, cap).map_err(|e| SolverError::Config(alloc::format!("{e}")))?);
    let mut log = InvariantLog {
        min_value: 0.0,
        max_cap_excess: -1.0,
        min_relative_increment: f64::INFINITY,
        max_courant: 0.0,
    };
    record(&mut log, &w, cap);
    let mut intervals = Vec::with_capacity(times.len() - 1);
    let mut steps = 0usize;
    let mut t = 0.0;

    for &t_next in &times[1..] {
        let mut stats = IntervalStats {
            t_start: t,
            t_end: t_next,
            steps: 0,
            dt_min: f64::INFINITY,
            dt_max: 0.0,
        };
        let uniform_steps = match config.step_control {
            StepControl::Uniform { dt } => {
                let k = libm::ceil((t_next - t) / dt.min(config.dt_max) - 1e-9).max(1.0);
                Some((k as usize, (t_next - t) / k))
            }
            StepControl::Adaptive => None,
        };
        let mut k = 0usize;
        while t < t_next {
            let (dt, land) = match uniform_steps {
                Some((count, dt)) => (dt, k + 1 == count),
                None => {
                    let remaining = t_next - t;
                    let dt = (config.cfl_safety * coef.courant_limit(&w)).min(config.dt_max);
                    if dt >= remaining * (1.0 - 1e-12) {
                        (remaining, true)
                    } else {
                        if dt < tol.dt_min {
                            return Err(SolverError::StepUnderflow { time: t, dt });
                        }
                        (dt, false)
                    }
                }
            };
            step(&coef, config.advection, &w, dt, cap, &mut rhs, &mut sub, &mut diag, &mut sup, &mut scratch, &mut log)
                .map_err(|(kind, index, value)| SolverError::Invariant {
                    kind,
                    time: t,
                    step: steps,
                    index,
                    s: nodes[index],
                    value,
                })?;
            w[1..last].copy_from_slice(&rhs);
            k += 1;
            steps += 1;
            t = if land { t_next } else { t + dt };
            stats.steps += 1;
            stats.dt_min = stats.dt_min.min(dt);
            stats.dt_max = stats.dt_max.max(dt);
            check(&w, cap, &tol).map_err(|(kind, index, value)| SolverError::Invariant {
                kind,
                time: t,
                step: steps,
                index,
                s: nodes[index],
                value,
            })?;
            record(&mut log, &w, cap);
            if steps >= config.max_steps {
                return Err(SolverError::StepLimit(config.max_steps));
            }
        }
        snapshots.push(MassFunction::new(w0.shared_nodes(), w.clone(), t_next, cap).map_err(|e| SolverError::Config(alloc::format!("{e}")))?);
        intervals.push(stats);
    }

    Ok(Trajectory {
        snapshots,
        stats: RunStats {
            dim: problem.dim,
            epsilon: config.epsilon,
            cells: len - 1,
            s_max: nodes[last],
            first_cell: nodes[1],
            advection: config.advection,
            steps,
            intervals,
            invariants: log,
        },
    })
}

type Breach = (InvariantKind, usize, f64);

/// One IMEX step; the new interior values are left in `rhs`.
#[allow(clippy::too_many_arguments)]
fn step(
    coef: &Coefficients,
    advection: Advection,
    w: &[f64],
    dt: f64,
    cap: f64,
    rhs: &mut [f64],
    sub: &mut [f64],
    diag: &mut [f64],
    sup: &mut [f64],
    scratch: &mut [f64],
    log: &mut InvariantLog,
) -> Result<(), Breach> {
    let last = w.len() - 1;
    for i in 1..last {
        let hp = coef.h_plus[i];
        let speed = coef.chi[i] * (w[i] + coef.n_f[i]);
        let courant = dt * speed / hp;
        if courant > 1.0 {
            return Err((InvariantKind::Courant, i, courant));
        }
        log.max_courant = log.max_courant.max(courant);
        let dp = (w[i + 1] - w[i]) / hp;
        let ws = match advection {
            Advection::Upwind => dp,
            Advection::Minmod if i + 1 < last => {
                let hpp = coef.h_plus[i + 1];
                let dpp = (w[i + 2] - w[i + 1]) / hpp;
                let dm = (w[i] - w[i - 1]) / coef.h_plus[i - 1];
                dp - hp / (hp + hpp) * minmod(dpp - dp, dp - dm)
            }
            Advection::Minmod => dp,
        };
        let j = i - 1;
        rhs[j] = w[i] + dt * speed * ws;
        sub[j] = -dt * coef.lower[i];
        sup[j] = -dt * coef.upper[i];
        diag[j] = 1.0 + dt * (coef.lower[i] + coef.upper[i]);
    }
    // Dirichlet data: W(0) = 0 contributes nothing, W(s_max) = cap
    let end = rhs.len() - 1;
    rhs[end] -= sup[end] * cap;
    tridiag::solve_tridiagonal(sub, diag, sup, rhs, scratch);
    Ok(())
}

fn check(w: &[f64], cap: f64, tol: &Tolerances) -> Result<(), Breach> {
    for i in 0..w.len() {
        let v = w[i];
        if !(v >= 0.0) {
            return Err((InvariantKind::Positivity, i, v));
        }
        if v > cap * (1.0 + tol.cap) {
            return Err((InvariantKind::MassCap, i, v / cap - 1.0));
        }
        if i + 1 < w.len() && w[i + 1] - v < -tol.monotone * cap {
            return Err((InvariantKind::Monotonicity, i, w[i + 1] - v));
        }
    }
    Ok(())
}

fn record(log: &mut InvariantLog, w: &[f64], cap: f64) {
    for i in 0..w.len() {
        log.min_value = log.min_value.min(w[i]);
        log.max_cap_excess = log.max_cap_excess.max(w[i] / cap - 1.0);
        if i + 1 < w.len() {
            log.min_relative_increment = log.min_relative_increment.min((w[i + 1] - w[i]) / cap);
        }
    }
}
