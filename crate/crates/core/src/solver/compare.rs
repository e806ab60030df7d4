//! Pointwise comparison of a run against sub- and supersolution candidates.

use super::Trajectory;
use crate::transform::MassFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ComparisonKind {
    /// The candidate should stay below the run.
    Sub,
    /// The candidate should stay above the run.
    Super,
}

/// Smallest signed margin over all checked nodes and snapshots. For
/// [`ComparisonKind::Sub`] the margin is `W - candidate`, for
/// [`ComparisonKind::Super`] it is `candidate - W`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ComparisonReport {
    pub kind: ComparisonKind,
    pub worst_margin: f64,
    pub at_s: f64,
    pub at_time: f64,
    pub node: usize,
    pub snapshot: usize,
    pub checked: usize,
}

impl ComparisonReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.worst_margin >= -tol
    }
}

/// Checks `candidate(s, t)` against every node with `s` in `s_range` and every
/// snapshot with `t <= t_max`.
pub fn comparison_check<C: Fn(f64, f64) -> f64>(
    traj: &Trajectory,
    candidate: C,
    kind: ComparisonKind,
    s_range: (f64, f64),
    t_max: f64,
) -> ComparisonReport {
    let mut rep = ComparisonReport {
        kind,
        worst_margin: f64::INFINITY,
        at_s: f64::NAN,
        at_time: f64::NAN,
        node: 0,
        snapshot: 0,
        checked: 0,
    };
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let t = snap.time();
        if t > t_max {
            continue;
        }
        for (i, (&s, &w)) in snap.nodes().iter().zip(snap.values()).enumerate() {
            if s < s_range.0 || s > s_range.1 {
                continue;
            }
            let c = candidate(s, t);
            let margin = match kind {
                ComparisonKind::Sub => w - c,
                ComparisonKind::Super => c - w,
            };
            rep.checked += 1;
            if margin < rep.worst_margin {
                rep.worst_margin = margin;
                rep.at_s = s;
                rep.at_time = t;
                rep.node = i;
                rep.snapshot = k;
            }
        }
    }
    rep
}

/// `c_sub = min{1, min_τ W^ε(1/2, τ) / W_0(1)}` over the snapshots with `τ <= t_max`.
///
/// `w0_at_one` should be exact (see [`crate::transform::RadialDensity::mass_function`]);
/// interpolating `W_0` across a kink at `s = 1` underestimates it.
pub fn measure_c_sub(traj: &Trajectory, w0_at_one: f64, t_max: f64) -> f64 {
    let denom = w0_at_one;
    traj.snapshots
        .iter()
        .filter(|m| m.time() <= t_max)
        .map(|m| m.eval(0.5) / denom)
        .fold(1.0, f64::min)
}

/// The stationary subsolution `c_sub s² W_0(s)` on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Subsolution {
    pub c_sub: f64,
    pub w0: MassFunction,
}

impl Subsolution {
    pub fn eval(&self, s: f64) -> f64 {
        self.c_sub * s * s * self.w0.eval(s)
    }

    /// [`comparison_check`] on `[0, 1] × [0, t_max]`.
    pub fn check(&self, traj: &Trajectory, t_max: f64) -> ComparisonReport {
        comparison_check(traj, |s, _| self.eval(s), ComparisonKind::Sub, (0.0, 1.0), t_max)
    }
}
