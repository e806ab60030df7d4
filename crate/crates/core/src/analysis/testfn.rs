//! The test functions `φ^(γ)` and the checks of their differential and
//! integral inequalities.
//!
//! ```text
//! φ(s) = (a/γ^δ) s^(-δ) - b   for s < ξ/γ,      φ(s) = e^(-γ s)   for s ≥ ξ/γ
//! ```
//!
//! `a` and `b` make `φ` continuously differentiable at `ξ/γ`.

use alloc::vec::Vec;

use super::AnalysisError;
use crate::math::{exp, ln, powf};
use crate::params::{delta_quadratic, TestFnParams, ValidatedParams};
use crate::quadrature::{integrate, integrate_with_breaks, QuadOptions};
use crate::signal::SignalProfile;

/// Constants of the test-function family.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TestFnConstants {
    pub a: f64,
    pub b: f64,
    /// Outer-branch constant `(n²ξ - 4(n²-n)) ξ^((n-2)/n)`.
    pub c1: f64,
    /// Inner-branch constant: the δ-quadratic times `ξ^(-2/n)`.
    pub c2: f64,
    pub k0: f64,
    /// `a ξ^(2-δ)/(δ(2-δ)) + e^(-ξ)`, which bounds `γ² ∫ φ²/|φ_s|`.
    pub big_k0: f64,
    /// `a ξ^(2-δ)/(2-δ) + e^(-ξ)`: the same expression without the `1/δ`
    /// factor. Smaller than the integral it is meant to bound when `δ < 1`;
    /// reported for comparison only.
    pub big_k0_without_delta: f64,
}

impl TestFnConstants {
    pub fn new(dim: u32, alpha: f64, f0: f64, xi: f64, delta: f64) -> Self {
        let n = dim as f64;
        let e = exp(-xi);
        let a = powf(xi, delta + 1.0) / delta * e;
        let b = (xi / delta - 1.0) * e;
        let c1 = (n * n * xi - 4.0 * (n * n - n)) * powf(xi, (n - 2.0) / n);
        let c2 = delta_quadratic(dim, alpha, f0, delta) * powf(xi, -2.0 / n);
        let inner = a * powf(xi, 2.0 - delta) / (2.0 - delta);
        TestFnConstants {
            a,
            b,
            c1,
            c2,
            k0: c1.min(c2),
            big_k0: inner / delta + e,
            big_k0_without_delta: inner + e,
        }
    }
}

/// `φ` together with the constants and the signal it was built for.
#[derive(Debug, Clone)]
pub struct TestFunction {
    pub dim: u32,
    pub params: TestFnParams,
    pub constants: TestFnConstants,
    signal: SignalProfile,
}

impl TestFunction {
    /// Fails when `c2 <= 0` (the exponent `δ` is below the feasibility bound)
    /// or when `(ξ, δ, γ)` violates its admissible ranges.
    pub fn new(params: &ValidatedParams, tf: TestFnParams, signal: SignalProfile) -> Result<Self, AnalysisError> {
        let p = &params.params;
        let constants = TestFnConstants::new(p.dim, p.alpha, p.f0, tf.xi, tf.delta);
        if !(constants.c2 > 0.0) {
            return Err(AnalysisError::NonPositiveC2 {
                delta: tf.delta,
                c2: constants.c2,
                lower_bound: params.delta_lower_bound,
            });
        }
        tf.validate(params)?;
        Ok(TestFunction {
            dim: p.dim,
            params: tf,
            constants,
            signal,
        })
    }

    pub fn signal(&self) -> &SignalProfile {
        &self.signal
    }

    pub fn gamma(&self) -> f64 {
        self.params.gamma
    }

    /// The matching point `ξ/γ`.
    pub fn kink(&self) -> f64 {
        self.params.xi / self.params.gamma
    }

    /// `k0 γ^(2/n)`, the linear rate `A` of the Riccati comparison.
    pub fn rate(&self) -> f64 {
        self.constants.k0 * powf(self.params.gamma, 2.0 / self.dim as f64)
    }

    /// `γ²/(2 K0)`, the quadratic coefficient `B` of the Riccati comparison.
    pub fn quadratic_coefficient(&self) -> f64 {
        let g = self.params.gamma;
        g * g / (2.0 * self.constants.big_k0)
    }

    fn inner_scale(&self) -> f64 {
        self.constants.a / powf(self.params.gamma, self.params.delta)
    }

    /// `(φ, φ_s, φ_ss)`; the outer branch is used at `s = ξ/γ`.
    pub fn eval(&self, s: f64) -> Result<(f64, f64, f64), AnalysisError> {
        if !(s > 0.0) {
            return Err(AnalysisError::Domain {
                quantity: "test-function argument s",
                value: s,
            });
        }
        let TestFnParams { delta, gamma, .. } = self.params;
        if s < self.kink() {
            let q = self.inner_scale() * powf(s, -delta);
            Ok((q - self.constants.b, -delta * q / s, delta * (delta + 1.0) * q / (s * s)))
        } else {
            let e = exp(-gamma * s);
            Ok((e, -gamma * e, gamma * gamma * e))
        }
    }

    /// `(φ_s/φ, φ_ss/φ)`, finite where `φ` itself underflows.
    fn log_derivatives(&self, s: f64) -> (f64, f64) {
        let TestFnParams { delta, gamma, .. } = self.params;
        if s < self.kink() {
            let q = self.inner_scale() * powf(s, -delta);
            let phi = q - self.constants.b;
            (-delta * q / (s * phi), delta * (delta + 1.0) * q / (s * s * phi))
        } else {
            (-gamma, gamma * gamma)
        }
    }

    /// `Lφ/φ` with
    /// `Lφ = n² s^((2n-2)/n) φ_ss + 4(n²-n) s^((n-2)/n) φ_s - nF φ_s - nF_s φ`.
    pub fn operator_ratio(&self, s: f64) -> f64 {
        let n = self.dim as f64;
        let (d1, d2) = self.log_derivatives(s);
        let f = self.signal.integral_unchecked(s);
        let fs = self.signal.integral_derivative_unchecked(s);
        n * n * powf(s, (2.0 * n - 2.0) / n) * d2 + 4.0 * (n * n - n) * powf(s, (n - 2.0) / n) * d1
            - n * f * d1
            - n * fs
    }

    /// `(Lφ - k0 γ^(2/n) φ)/φ`, non-negative where the differential inequality holds.
    pub fn margin(&self, s: f64) -> f64 {
        self.operator_ratio(s) - self.rate()
    }

    /// `∫_0^∞ φ ds = (a ξ^(1-δ)/(1-δ) - b ξ + e^(-ξ))/γ`.
    pub fn integral(&self) -> f64 {
        let TestFnParams { xi, delta, gamma } = self.params;
        (self.constants.a * powf(xi, 1.0 - delta) / (1.0 - delta) - self.constants.b * xi + exp(-xi)) / gamma
    }
}

/// `count` points spaced evenly in `ln s` over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (ln(lo), ln(hi));
    (0..count)
        .map(|k| match k {
            0 => lo,
            k if k + 1 == count => hi,
            k => exp(a + (b - a) * k as f64 / (count - 1) as f64),
        })
        .collect()
}

/// Result of scanning the differential inequality on a grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MarginReport {
    pub min_margin: f64,
    pub at_s: f64,
    pub evaluated: usize,
    /// Grid points adjacent to `ξ/γ` or to a breakpoint of the signal.
    pub skipped: usize,
    pub passed: bool,
    /// `(s, margin)` for every evaluated point.
    pub scan: Vec<(f64, f64)>,
}

/// Verdict threshold for the margin scan.
pub const MARGIN_SLACK: f64 = 1e-9;

/// Evaluates the margin on `grid`, skipping each point whose neighbours
/// bracket a non-smooth point.
pub fn verify_ode_inequality(tf: &TestFunction, grid: &[f64]) -> MarginReport {
    let (s_lo, s_hi) = tf.signal.bridge_s_range();
    let kinks = [tf.kink(), s_lo, s_hi];
    let mut rep = MarginReport {
        min_margin: f64::INFINITY,
        at_s: f64::NAN,
        evaluated: 0,
        skipped: 0,
        passed: true,
        scan: Vec::with_capacity(grid.len()),
    };
    for (i, &s) in grid.iter().enumerate() {
        let left = if i > 0 { grid[i - 1] } else { s };
        let right = if i + 1 < grid.len() { grid[i + 1] } else { s };
        if kinks.iter().any(|&k| k >= left && k <= right) {
            rep.skipped += 1;
            continue;
        }
        let m = tf.margin(s);
        rep.evaluated += 1;
        rep.scan.push((s, m));
        if !(m >= rep.min_margin) {
            rep.min_margin = m;
            rep.at_s = s;
        }
    }
    rep.passed = rep.min_margin >= -MARGIN_SLACK;
    rep
}

/// Numeric value of `∫_0^∞ φ²/|φ_s|` against its closed-form bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct IntegralBound {
    pub numeric: f64,
    /// `K0/γ²`.
    pub bound: f64,
    /// `K0/γ²` with the constant lacking the `1/δ` factor.
    pub bound_without_delta: f64,
    /// `a ξ^(2-δ)/(δ(2-δ)γ²)`, which dominates the inner piece.
    pub inner_bound: f64,
    pub inner_numeric: f64,
    /// `e^(-ξ)/γ²`, the exact outer piece.
    pub outer_exact: f64,
    pub outer_numeric: f64,
    pub holds: bool,
}

pub fn verify_integral_bound(tf: &TestFunction) -> Result<IntegralBound, AnalysisError> {
    let TestFnParams { xi, delta, gamma } = tf.params;
    let kink = tf.kink();
    let opts = QuadOptions {
        rel_tol: 1e-12,
        ..QuadOptions::default()
    };
    let ratio = |s: f64| {
        let (p, ps, _) = tf.eval(s).unwrap_or((0.0, 1.0, 0.0));
        p * p / ps.abs()
    };
    let inner = integrate(ratio, 0.0, kink, &opts)?.value;
    // outer piece in u = γ s: ∫_ξ^∞ e^(-u) du / γ², with the far tail in closed form
    let span = 60.0;
    let outer = integrate_with_breaks(|u| exp(-u), xi, xi + span, &[], &opts)?.value / (gamma * gamma)
        + exp(-xi - span) / (gamma * gamma);
    let g2 = gamma * gamma;
    let c = &tf.constants;
    let numeric = inner + outer;
    let bound = c.big_k0 / g2;
    Ok(IntegralBound {
        numeric,
        bound,
        bound_without_delta: c.big_k0_without_delta / g2,
        inner_bound: c.a * powf(xi, 2.0 - delta) / (delta * (2.0 - delta) * g2),
        inner_numeric: inner,
        outer_exact: exp(-xi) / g2,
        outer_numeric: outer,
        holds: numeric <= bound,
    })
}
