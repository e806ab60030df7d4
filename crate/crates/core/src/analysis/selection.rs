//! Choice of `κ`, `s0` and `γ` for the blow-up argument on `(t0, t0 + η)`.
//!
//! With `X = κ γ^(2/n)` and `s* = κ γ^((2-n)/n)`, the growth condition reads
//!
//! ```text
//! 1 + 2 k0 K0 e^X / (W(s*, t0 + η/2) γ^((n-2)/n)) <= e^(2X)
//! ```
//!
//! and is evaluated in logarithmic form since `e^(2X)` overflows long before
//! the search ends.

use super::{AnalysisError, TestFnConstants};
use crate::math::{ln, ln_sinh, powf, softplus};
use crate::params::ValidatedParams;

/// Inputs of the selection besides the test-function constants.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SelectionInputs {
    pub t0: f64,
    pub eta: f64,
    /// Slope `c0` of the lower bound `W0(s) >= c0 s` on `[0, 1]`.
    pub c0: f64,
    /// Subsolution constant.
    pub c_sub: f64,
    pub xi: f64,
    /// Largest `γ` tried before giving up.
    pub gamma_cap: f64,
}

impl SelectionInputs {
    pub const DEFAULT_GAMMA_CAP: f64 = 1_152_921_504_606_846_976.0; // 2^60
}

/// Outcome of the selection, with the quantities entering every inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Selection {
    /// `k0 η / 8`.
    pub kappa: f64,
    pub s0: f64,
    /// Upper bound on `s0` from the monotonicity requirement.
    pub s0_bound: f64,
    /// `ln(c0 c_sub s0³ sinh(κ (κ/s0)^(2/(n-2)))) - ln(k0 K0 / κ)`, non-negative.
    pub s0_log_slack: f64,
    pub gamma: f64,
    /// `4/(R - ρ)`.
    pub gamma_floor_radius: f64,
    /// `(ξ/κ)^(n/2)`.
    pub gamma_floor_xi: f64,
    pub gamma_start: f64,
    pub doublings: u32,
    /// `s* = κ γ^((2-n)/n)`.
    pub probe: f64,
    /// Measured `W(s*, t0 + η/2)`.
    pub w_probe: f64,
    /// Logarithms of both sides of the growth condition.
    pub growth_lhs_log: f64,
    pub growth_rhs_log: f64,
    pub probe_time: f64,
}

/// Runs the selection; `w_at(s)` returns the measured `W(s, t0 + η/2)`.
pub fn select_blowup_params<W: Fn(f64) -> f64>(
    params: &ValidatedParams,
    constants: &TestFnConstants,
    inputs: &SelectionInputs,
    w_at: W,
) -> Result<Selection, AnalysisError> {
    let n = params.dim() as f64;
    if !(inputs.eta > 0.0) {
        return Err(AnalysisError::Domain {
            quantity: "eta",
            value: inputs.eta,
        });
    }
    if !(inputs.c_sub > 0.0) {
        return Err(AnalysisError::Domain {
            quantity: "c_sub",
            value: inputs.c_sub,
        });
    }
    if !(inputs.c0 > 0.0) {
        return Err(AnalysisError::Domain {
            quantity: "c0",
            value: inputs.c0,
        });
    }
    let k0 = constants.k0;
    let big_k0 = constants.big_k0;
    let kappa = k0 * inputs.eta / 8.0;

    let s0_bound = powf(2.0 * powf(kappa, n / (n - 2.0)) / (3.0 * (n - 2.0)), (n - 2.0) / 2.0);
    let target = ln(k0 * big_k0 / kappa);
    let slack = |s: f64| {
        ln(inputs.c0 * inputs.c_sub) + 3.0 * ln(s) + ln_sinh(kappa * powf(kappa / s, 2.0 / (n - 2.0))) - target
    };
    // largest s0 below the bound (and below 1) meeting the sinh inequality
    let upper = s0_bound.min(1.0) * (1.0 - 1e-12);
    let s0 = if slack(upper) >= 0.0 {
        upper
    } else {
        let mut lo = upper;
        while slack(lo) < 0.0 {
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(AnalysisError::Selection {
                    inequality: "no s0 in (0, 1) satisfies the sinh lower bound",
                    gamma: f64::NAN,
                });
            }
        }
        let mut hi = (2.0 * lo).min(upper);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if slack(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };

    let floor_r = params.gamma_floor();
    let floor_xi = powf(inputs.xi / kappa, n / 2.0);
    let start = floor_r.max(floor_xi);
    let mut gamma = start;
    let mut doublings = 0u32;
    loop {
        let probe = kappa * powf(gamma, (2.0 - n) / n);
        let x = kappa * powf(gamma, 2.0 / n);
        let w = w_at(probe);
        let lhs = if w > 0.0 {
            softplus(ln(2.0 * k0 * big_k0) + x - ln(w) - (n - 2.0) / n * ln(gamma))
        } else {
            f64::INFINITY
        };
        let rhs = 2.0 * x;
        if gamma > floor_r && gamma > floor_xi && s0 > probe && lhs <= rhs {
            return Ok(Selection {
                kappa,
                s0,
                s0_bound,
                s0_log_slack: slack(s0),
                gamma,
                gamma_floor_radius: floor_r,
                gamma_floor_xi: floor_xi,
                gamma_start: start,
                doublings,
                probe,
                w_probe: w,
                growth_lhs_log: lhs,
                growth_rhs_log: rhs,
                probe_time: inputs.t0 + 0.5 * inputs.eta,
            });
        }
        if 2.0 * gamma > inputs.gamma_cap {
            let inequality = if !(gamma > floor_r && gamma > floor_xi) {
                "gamma above its lower bounds"
            } else if !(s0 > probe) {
                "s0 > kappa gamma^((2-n)/n)"
            } else {
                "growth condition on W(kappa gamma^((2-n)/n), t0 + eta/2)"
            };
            return Err(AnalysisError::Selection { inequality, gamma });
        }
        gamma *= 2.0;
        doublings += 1;
    }
}
