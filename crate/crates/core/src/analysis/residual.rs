//! Residual of the weak formulation
//!
//! ```text
//! -∫∫ ζ_t W - ∫ ζ(·,0) W0 = n² ∫∫ (s^((2n-2)/n) ζ)_ss W - ½ ∫∫ ζ_s W² - n ∫∫ (F ζ)_s W
//! ```
//!
//! for tensor-product bumps `ζ(s, t) = σ(s) τ(t)`, integrated with 5×5
//! Gauss–Legendre panels inside every cell × snapshot interval against the
//! bilinear interpolant of the snapshots.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::AnalysisError;
use crate::math::{ceil, exp, powf};
use crate::quadrature::gauss_legendre_5;
use crate::solver::{Problem, Trajectory};
use crate::transform::MassFunction;

/// Cells are split so that each Gauss–Legendre panel spans at most
/// `half_width / SPACE_PIECES` in `s` and `t_end / TIME_PIECES` in `t`.
const SPACE_PIECES: f64 = 128.0;
const TIME_PIECES: f64 = 200.0;

/// `ζ(s, t) = σ((s - center)/half_width) · E((t_end - t)/t_end)` with the bump
/// `σ(x) = exp(-1/(1 - x²))` and the smooth step `E` from 0 (at `t = t_end`)
/// to 1 (at `t = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TensorBump {
    pub center: f64,
    pub half_width: f64,
    pub t_end: f64,
}

/// Value and derivatives of a bump at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
struct BumpValue {
    v: f64,
    d1: f64,
    d2: f64,
}

/// `E(x) = 1/(1 + exp(1/x - 1/(1-x)))` on `(0, 1)` and its derivative.
fn smooth_step(x: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 0.0);
    }
    if x >= 1.0 {
        return (1.0, 0.0);
    }
    let arg = 1.0 / x - 1.0 / (1.0 - x);
    if arg > 700.0 {
        return (0.0, 0.0);
    }
    let r = exp(arg);
    let e = 1.0 / (1.0 + r);
    let d = r / ((1.0 + r) * (1.0 + r)) * (1.0 / (x * x) + 1.0 / ((1.0 - x) * (1.0 - x)));
    (e, d)
}

impl TensorBump {
    pub fn new(center: f64, half_width: f64, t_end: f64) -> Result<Self, AnalysisError> {
        if !(half_width > 0.0 && center - half_width >= 0.0 && center.is_finite()) {
            return Err(AnalysisError::Field(format!(
                "spatial support [{}, {}] must lie in [0, ∞) and have positive width",
                center - half_width,
                center + half_width
            )));
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(AnalysisError::Field(format!("time horizon must be positive (got {t_end})")));
        }
        Ok(TensorBump {
            center,
            half_width,
            t_end,
        })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    fn space(&self, s: f64) -> BumpValue {
        let w = self.half_width;
        let x = (s - self.center) / w;
        let d = 1.0 - x * x;
        if d <= 0.0 {
            return BumpValue { v: 0.0, d1: 0.0, d2: 0.0 };
        }
        let sigma = exp(-1.0 / d);
        let g1 = -2.0 * x / (d * d);
        let g2 = -(2.0 + 6.0 * x * x) / (d * d * d);
        BumpValue {
            v: sigma,
            d1: sigma * g1 / w,
            d2: sigma * (g1 * g1 + g2) / (w * w),
        }
    }

    /// `(τ, τ_t)`.
    fn time(&self, t: f64) -> (f64, f64) {
        let (e, d) = smooth_step((self.t_end - t) / self.t_end);
        (e, -d / self.t_end)
    }

    /// `(ζ, ζ_t, ζ_s, ζ_ss)`.
    pub fn eval(&self, s: f64, t: f64) -> (f64, f64, f64, f64) {
        let b = self.space(s);
        let (tau, tau_t) = self.time(t);
        (b.v * tau, b.v * tau_t, b.d1 * tau, b.d2 * tau)
    }
}

/// Three fields covering the layer near the origin, the signal bridge and the
/// far field, all vanishing at `t_end`.
pub fn field_library(t_end: f64) -> Result<[TensorBump; 3], AnalysisError> {
    Ok([
        TensorBump::new(0.1, 0.08, t_end)?,
        TensorBump::new(0.5, 0.3, t_end)?,
        TensorBump::new(1.2, 0.5, t_end)?,
    ])
}

/// The individual integrals; `residual = |t1 + t2 - (t3 + t4 + t5)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ResidualTerms {
    /// `-∫∫ ζ_t W`.
    pub t1: f64,
    /// `-∫ ζ(·,0) W0`.
    pub t2: f64,
    /// `n² ∫∫ (s^((2n-2)/n) ζ)_ss W`.
    pub t3: f64,
    /// `-½ ∫∫ ζ_s W²`.
    pub t4: f64,
    /// `-n ∫∫ (F ζ)_s W`.
    pub t5: f64,
    pub residual: f64,
    /// `Σ |t_i|`.
    pub scale: f64,
}

impl ResidualTerms {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual / self.scale
        } else {
            0.0
        }
    }
}

/// Evaluates the weak identity of `traj` against `zeta`. The first snapshot
/// must be at `t = 0`; the spatial support must lie in `[ε, s_max]`, where the
/// cut-off equals one, and `zeta.t_end` must not exceed the last snapshot.
pub fn weak_residual(traj: &Trajectory, problem: &Problem, zeta: &TensorBump) -> Result<ResidualTerms, AnalysisError> {
    let nodes = traj.nodes();
    let s_max = nodes[nodes.len() - 1];
    let (lo, hi) = zeta.support();
    let eps = traj.epsilon();
    if lo < eps || hi > s_max {
        return Err(AnalysisError::Field(format!(
            "spatial support [{lo}, {hi}] leaves [epsilon, s_max] = [{eps}, {s_max}]"
        )));
    }
    let first = &traj.snapshots[0];
    if first.time() != 0.0 {
        return Err(AnalysisError::Field(format!(
            "the first snapshot must be the initial state (found t = {})",
            first.time()
        )));
    }
    let end = traj.snapshots[traj.snapshots.len() - 1].time();
    if zeta.t_end > end * (1.0 + 1e-12) {
        return Err(AnalysisError::Horizon {
            requested: zeta.t_end,
            end,
        });
    }
    if problem.dim != traj.dim() {
        return Err(AnalysisError::Field(format!(
            "problem dimension {} differs from the trajectory's {}",
            problem.dim,
            traj.dim()
        )));
    }
    let n = problem.dim as f64;
    let a = (2.0 * n - 2.0) / n;

    // spatial quadrature points clipped to the support, with the time-independent factors
    struct Point {
        cell: usize,
        lambda: f64,
        weight: f64,
        sigma: f64,
        sigma_s: f64,
        /// `n² (s^a σ)_ss`
        diffusion: f64,
        /// `-n (F σ)_s`
        signal: f64,
    }
    let mut points = Vec::new();
    let first_cell = nodes.partition_point(|&x| x <= lo).saturating_sub(1);
    for i in first_cell..nodes.len() - 1 {
        let (u, v) = (nodes[i].max(lo), nodes[i + 1].min(hi));
        if u >= hi {
            break;
        }
        if v <= u {
            continue;
        }
        let pieces = ceil((v - u) / (zeta.half_width / SPACE_PIECES)).max(1.0) as usize;
        let h = (v - u) / pieces as f64;
        for (s, weight) in (0..pieces).flat_map(|j| gauss_legendre_5(u + j as f64 * h, u + (j + 1) as f64 * h)) {
            let b = zeta.space(s);
            let (f, fs) = match &problem.signal {
                Some(sig) => (sig.integral_unchecked(s), sig.integral_derivative_unchecked(s)),
                None => (0.0, 0.0),
            };
            let sa = powf(s, a);
            let second = a * (a - 1.0) * sa / (s * s) * b.v + 2.0 * a * sa / s * b.d1 + sa * b.d2;
            points.push(Point {
                cell: i,
                lambda: (s - nodes[i]) / (nodes[i + 1] - nodes[i]),
                weight,
                sigma: b.v,
                sigma_s: b.d1,
                diffusion: n * n * second,
                signal: -n * (fs * b.v + f * b.d1),
            });
        }
    }
    let w_at = |m: &MassFunction, p: &Point| {
        let v = m.values();
        v[p.cell] + p.lambda * (v[p.cell + 1] - v[p.cell])
    };

    let t2 = -points.iter().map(|p| p.weight * p.sigma * w_at(first, p)).sum::<f64>();
    let (mut t1, mut t3, mut t4, mut t5) = (0.0, 0.0, 0.0, 0.0);
    let mut w0 = vec![0.0; points.len()];
    let mut w1 = vec![0.0; points.len()];
    for pair in traj.snapshots.windows(2) {
        let (ta, tb) = (pair[0].time(), pair[1].time().min(zeta.t_end));
        if ta >= zeta.t_end {
            break;
        }
        for (k, p) in points.iter().enumerate() {
            w0[k] = w_at(&pair[0], p);
            w1[k] = w_at(&pair[1], p);
        }
        let span = pair[1].time() - ta;
        let pieces = ceil((tb - ta) / (zeta.t_end / TIME_PIECES)).max(1.0) as usize;
        let h = (tb - ta) / pieces as f64;
        for (t, wt) in (0..pieces).flat_map(|j| gauss_legendre_5(ta + j as f64 * h, ta + (j + 1) as f64 * h)) {
            let (tau, tau_t) = zeta.time(t);
            let mu = (t - ta) / span;
            let (mut a1, mut a3, mut a4, mut a5) = (0.0, 0.0, 0.0, 0.0);
            for (k, p) in points.iter().enumerate() {
                let w = w0[k] + mu * (w1[k] - w0[k]);
                let pw = p.weight * w;
                a1 += pw * p.sigma;
                a4 += pw * w * p.sigma_s;
                a3 += pw * p.diffusion;
                a5 += pw * p.signal;
            }
            t1 -= wt * tau_t * a1;
            t3 += wt * tau * a3;
            t4 -= 0.5 * wt * tau * a4;
            t5 += wt * tau * a5;
        }
    }
    let residual = (t1 + t2 - (t3 + t4 + t5)).abs();
    Ok(ResidualTerms {
        t1,
        t2,
        t3,
        t4,
        t5,
        residual,
        scale: t1.abs() + t2.abs() + t3.abs() + t4.abs() + t5.abs(),
    })
}

/// The stationary state `W ≡ cap` on `nodes`, sampled at `times` (which must
/// start at 0).
pub fn constant_state(
    nodes: Arc<[f64]>,
    cap: f64,
    times: &[f64],
    dim: u32,
    epsilon: f64,
) -> Result<Trajectory, AnalysisError> {
    let snapshots = times
        .iter()
        .map(|&t| MassFunction::new(nodes.clone(), vec![cap; nodes.len()], t, cap))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| AnalysisError::Field(format!("{e}")))?;
    Trajectory::from_snapshots(dim, epsilon, snapshots).map_err(|e| AnalysisError::Field(format!("{e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;
    use crate::params::SystemParams;
    use crate::signal::SignalProfile;

    fn problem() -> Problem {
        Problem::new(
            SignalProfile::new(&SystemParams {
                dim: 3,
                alpha: 2.5,
                f0: 2.0,
                radius: 0.5,
                rho: 0.1,
                c0: 1.0,
            })
            .unwrap(),
        )
    }

    #[test]
    fn derivatives_match_differences() {
        let z = TensorBump::new(1.0, 0.5, 0.05).unwrap();
        let h = 1e-6;
        for &(s, t) in &[(0.7, 0.01), (1.2, 0.03), (1.45, 0.001)] {
            let (_, zt, zs, zss) = z.eval(s, t);
            let (p, _, ps, _) = z.eval(s + h, t);
            let (m, _, ms, _) = z.eval(s - h, t);
            assert!((zs - (p - m) / (2.0 * h)).abs() < 1e-6 * zs.abs().max(1e-3));
            assert!((zss - (ps - ms) / (2.0 * h)).abs() < 1e-5 * zss.abs().max(1e-3));
            let ht = 1e-9;
            let (a, ..) = z.eval(s, t + ht);
            let (b, ..) = z.eval(s, t - ht);
            assert!((zt - (a - b) / (2.0 * ht)).abs() < 1e-5 * zt.abs().max(1e-3));
        }
        assert_eq!(z.eval(0.4, 0.01).0, 0.0);
        assert_eq!(z.eval(1.0, 0.06).0, 0.0);
        assert!((z.eval(1.0, 0.0).0 - exp(-1.0)).abs() < 1e-16);
    }

    #[test]
    fn constant_state_residual_vanishes() {
        let mesh = build_mesh(4.0, 512, 1.02).unwrap();
        let times: Vec<f64> = (0..=50).map(|k| k as f64 * 0.001).collect();
        let traj = constant_state(mesh.shared_nodes(), 0.75, &times, 3, 1e-3).unwrap();
        let r = weak_residual(&traj, &problem(), &TensorBump::new(1.0, 0.5, 0.05).unwrap()).unwrap();
        assert!(r.scale > 0.1);
        assert!(r.residual <= 1e-8 * r.scale, "{r:?}");
    }

    #[test]
    fn support_and_horizon_checks() {
        let mesh = build_mesh(4.0, 256, 1.05).unwrap();
        let traj = constant_state(mesh.shared_nodes(), 0.75, &[0.0, 0.01], 3, 1e-2).unwrap();
        let p = problem();
        assert!(weak_residual(&traj, &p, &TensorBump::new(0.01, 0.005, 0.01).unwrap()).is_err());
        assert!(weak_residual(&traj, &p, &TensorBump::new(3.5, 1.0, 0.01).unwrap()).is_err());
        assert!(matches!(
            weak_residual(&traj, &p, &TensorBump::new(1.0, 0.5, 0.02).unwrap()),
            Err(AnalysisError::Horizon { .. })
        ));
        assert!(TensorBump::new(0.1, 0.2, 0.01).is_err());
        assert!(TensorBump::new(1.0, 0.5, 0.0).is_err());
        assert_eq!(field_library(0.05).unwrap().len(), 3);
    }
}
