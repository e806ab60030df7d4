//! The functional `y(t) = ∫_0^∞ φ W ds` and the blow-up indicators.

use alloc::vec::Vec;

use super::riccati::Riccati;
use super::testfn::TestFunction;
use super::AnalysisError;
use crate::math::{exp, exp_m1, powf};
use crate::solver::Trajectory;
use crate::transform::{DiracAtom, MassFunction};

/// `∫_u^v (w_u + m (s - u)) (q s^(-δ) - b) ds`.
fn inner_piece(u: f64, v: f64, w_u: f64, m: f64, q: f64, b: f64, delta: f64) -> f64 {
    // write W = c0 + m s on the cell
    let c0 = w_u - m * u;
    let p1 = |s: f64| {
        if s == 0.0 {
            0.0
        } else {
            q * (c0 * powf(s, 1.0 - delta) / (1.0 - delta) + m * powf(s, 2.0 - delta) / (2.0 - delta))
        }
    };
    let p2 = |s: f64| b * (c0 * s + 0.5 * m * s * s);
    (p1(v) - p1(u)) - (p2(v) - p2(u))
}

/// `1 - e^(-x)(1 + x)`, accurate for small `x`.
fn one_minus_exp_poly(x: f64) -> f64 {
    if x < 1e-3 {
        x * x * (0.5 - x * (1.0 / 3.0 - x * (0.125 - x / 30.0)))
    } else {
        -exp_m1(-x) - x * exp(-x)
    }
}

/// `∫_u^v (w_u + m (s - u)) e^(-γ s) ds`.
fn outer_piece(u: f64, v: f64, w_u: f64, m: f64, gamma: f64) -> f64 {
    let x = gamma * (v - u);
    exp(-gamma * u) * (w_u * (-exp_m1(-x)) / gamma + m * one_minus_exp_poly(x) / (gamma * gamma))
}

/// `∫_0^∞ φ W ds` for the piecewise-linear `W` of one snapshot, exactly on
/// every cell, with `W = cap` beyond the mesh.
pub fn y_value(w: &MassFunction, tf: &TestFunction) -> f64 {
    let gamma = tf.gamma();
    let delta = tf.params.delta;
    let kink = tf.kink();
    let q = tf.constants.a / powf(gamma, delta);
    let b = tf.constants.b;
    let (s, v) = (w.nodes(), w.values());
    let mut total = 0.0;
    for i in 0..s.len() - 1 {
        let (u, r) = (s[i], s[i + 1]);
        let m = (v[i + 1] - v[i]) / (r - u);
        if r <= kink {
            total += inner_piece(u, r, v[i], m, q, b, delta);
        } else if u >= kink {
            total += outer_piece(u, r, v[i], m, gamma);
        } else {
            let wk = v[i] + m * (kink - u);
            total += inner_piece(u, kink, v[i], m, q, b, delta) + outer_piece(kink, r, wk, m, gamma);
        }
    }
    let s_max = w.s_max();
    if s_max >= kink {
        total += w.cap() * exp(-gamma * s_max) / gamma;
    } else {
        // φ integrated from s_max to the kink, then the exponential branch
        total += inner_piece(s_max, kink, w.cap(), 0.0, q, b, delta) + w.cap() * exp(-tf.params.xi) / gamma;
    }
    total
}

/// `y(t1) >= (c_γ/γ) e^(-κ γ^(2/n))` with `c_γ = W(κ γ^((2-n)/n), t1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LowerBoundCheck {
    pub t1: f64,
    pub y_t1: f64,
    pub probe: f64,
    pub c_gamma: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Comparison of `y` with the Riccati solution started from `y(t1)`.
///
/// `y >= z` is proved for the limit `ε → 0`; a finite-`ε` run stays bounded
/// by the cap and therefore must fall below `z` before `t1 + T`. The verdict
/// is reported, not asserted.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RiccatiDomination {
    pub riccati: Riccati,
    pub blow_up_time: f64,
    /// `t1 + T`.
    pub blow_up_at: f64,
    /// `(t, y, z)` at every snapshot in `[t1, t1 + T)`.
    pub overlap: Vec<(f64, f64, f64)>,
    /// `min (y - z + tol max(1, |z|))` over the overlap.
    pub worst_margin: f64,
    pub dominated: bool,
    /// First snapshot time with `y < z - tol max(1, |z|)`.
    pub first_violation: Option<f64>,
}

/// Time series of `y` with its a-priori bounds.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct YFunctional {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// `cap ∫ φ`.
    pub cap_bound: f64,
    pub cap_holds: bool,
    pub lower_bound: LowerBoundCheck,
    pub riccati: RiccatiDomination,
}

/// Evaluates `y` on every snapshot, checks `y <= cap ∫φ` and the lower bound
/// at `t1`, then compares with the Riccati solution with `A`, `B` from `tf`.
/// `t1` must be a snapshot time.
pub fn y_functional(
    traj: &Trajectory,
    tf: &TestFunction,
    t1: f64,
    kappa: f64,
    tol: f64,
) -> Result<YFunctional, AnalysisError> {
    let end = traj.snapshots.last().map_or(f64::NAN, |m| m.time());
    if !(t1 <= end * (1.0 + 1e-12)) {
        return Err(AnalysisError::Horizon { requested: t1, end });
    }
    let start = traj.at_time(t1).ok_or(AnalysisError::Domain {
        quantity: "t1 (not a snapshot time)",
        value: t1,
    })?;
    let times = traj.times();
    let values: Vec<f64> = traj.snapshots.iter().map(|m| y_value(m, tf)).collect();
    let cap_bound = traj.cap() * tf.integral();
    let cap_holds = values.iter().all(|&y| y <= cap_bound * (1.0 + tol));

    let n = tf.dim as f64;
    let gamma = tf.gamma();
    let probe = kappa * powf(gamma, (2.0 - n) / n);
    let c_gamma = start.eval(probe);
    let y_t1 = y_value(start, tf);
    let bound = c_gamma / gamma * exp(-kappa * powf(gamma, 2.0 / n));
    let lower_bound = LowerBoundCheck {
        t1,
        y_t1,
        probe,
        c_gamma,
        bound,
        holds: y_t1 >= bound * (1.0 - tol),
    };

    let riccati = Riccati::new(tf.rate(), tf.quadratic_coefficient(), y_t1, t1)?;
    let blow_up_time = riccati.blow_up_time();
    let mut dom = RiccatiDomination {
        riccati,
        blow_up_time,
        blow_up_at: t1 + blow_up_time,
        overlap: Vec::new(),
        worst_margin: f64::INFINITY,
        dominated: true,
        first_violation: None,
    };
    for (&t, &y) in times.iter().zip(&values) {
        if t < start.time() {
            continue;
        }
        let Ok(z) = riccati.eval(t) else { break };
        let m = y - z + tol * z.abs().max(1.0);
        dom.overlap.push((t, y, z));
        dom.worst_margin = dom.worst_margin.min(m);
        if m < 0.0 && dom.first_violation.is_none() {
            dom.first_violation = Some(t);
        }
    }
    dom.dominated = dom.first_violation.is_none();
    Ok(YFunctional {
        times,
        values,
        cap_bound,
        cap_holds,
        lower_bound,
        riccati: dom,
    })
}

/// Supremum of `W/s^β` for one `β`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BetaIndicator {
    pub beta: f64,
    pub sup: f64,
    pub at_s: f64,
    pub at_time: f64,
}

/// Indicators of a single snapshot.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct IndicatorSample {
    pub time: f64,
    /// `max W/s^β` over the probes, in the order of the requested `β`.
    pub sup: Vec<f64>,
    /// Largest forward-difference slope of `W`.
    pub lipschitz: f64,
    /// Mass of the Dirac atom estimated from `W(0+)`.
    pub atom: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BlowupReport {
    pub epsilon: f64,
    pub cells: usize,
    pub s_max: f64,
    /// Probes are the mesh nodes in `(0, probe_limit]`.
    pub probe_limit: f64,
    pub betas: Vec<BetaIndicator>,
    pub lipschitz: f64,
    pub lipschitz_at_s: f64,
    pub lipschitz_at_time: f64,
    /// Atom estimate at the last snapshot.
    pub atom: f64,
    pub series: Vec<IndicatorSample>,
}

/// `sup W/s^β` over mesh nodes `s <= s_max/2` and all snapshots, the largest
/// forward-difference slope, and the atom estimate. Requires `β >= 1`.
pub fn blowup_indicator(traj: &Trajectory, betas: &[f64]) -> Result<BlowupReport, AnalysisError> {
    if let Some(&bad) = betas.iter().find(|&&b| !(b >= 1.0 && b.is_finite())) {
        return Err(AnalysisError::Domain { quantity: "beta", value: bad });
    }
    let nodes = traj.nodes();
    let s_max = nodes[nodes.len() - 1];
    let probe_limit = 0.5 * s_max;
    let mut report = BlowupReport {
        epsilon: traj.epsilon(),
        cells: nodes.len() - 1,
        s_max,
        probe_limit,
        betas: betas
            .iter()
            .map(|&beta| BetaIndicator {
                beta,
                sup: f64::NEG_INFINITY,
                at_s: f64::NAN,
                at_time: f64::NAN,
            })
            .collect(),
        lipschitz: f64::NEG_INFINITY,
        lipschitz_at_s: f64::NAN,
        lipschitz_at_time: f64::NAN,
        atom: 0.0,
        series: Vec::with_capacity(traj.snapshots.len()),
    };
    for snap in &traj.snapshots {
        let t = snap.time();
        let v = snap.values();
        let mut sample = IndicatorSample {
            time: t,
            sup: alloc::vec![f64::NEG_INFINITY; betas.len()],
            lipschitz: f64::NEG_INFINITY,
            atom: 0.0,
        };
        for (i, &s) in nodes.iter().enumerate().skip(1) {
            if s > probe_limit {
                break;
            }
            for (k, &beta) in betas.iter().enumerate() {
                let r = v[i] / powf(s, beta);
                if r > sample.sup[k] {
                    sample.sup[k] = r;
                }
                if r > report.betas[k].sup {
                    report.betas[k].sup = r;
                    report.betas[k].at_s = s;
                    report.betas[k].at_time = t;
                }
            }
        }
        for i in 0..nodes.len() - 1 {
            let slope = (v[i + 1] - v[i]) / (nodes[i + 1] - nodes[i]);
            if slope > sample.lipschitz {
                sample.lipschitz = slope;
            }
            if slope > report.lipschitz {
                report.lipschitz = slope;
                report.lipschitz_at_s = nodes[i];
                report.lipschitz_at_time = t;
            }
        }
        sample.atom = DiracAtom::from_origin_limit(traj.dim(), snap.origin_limit().jump).mass;
        report.series.push(sample);
    }
    report.atom = report.series.last().map_or(0.0, |s| s.atom);
    Ok(report)
}
