//! The Bernoulli problem `z' = A z + B z²`, `z(t1) = y1`, and a comparison
//! lemma for `y(t) >= y(t1) + ∫ Φ(y)` with non-decreasing `Φ`.

use alloc::vec::Vec;

use super::AnalysisError;
use crate::math::{exp, exp_m1, ln_1p};

/// Closed-form solution of `z' = A z + B z²`, `z(t1) = y1`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Riccati {
    pub a: f64,
    pub b: f64,
    pub y1: f64,
    pub t1: f64,
}

impl Riccati {
    /// Requires `A, y1 > 0` and `B >= 0`.
    pub fn new(a: f64, b: f64, y1: f64, t1: f64) -> Result<Self, AnalysisError> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(AnalysisError::Domain { quantity: "A", value: a });
        }
        if !(b >= 0.0 && b.is_finite()) {
            return Err(AnalysisError::Domain { quantity: "B", value: b });
        }
        if !(y1 > 0.0 && y1.is_finite()) {
            return Err(AnalysisError::Domain { quantity: "y1", value: y1 });
        }
        Ok(Riccati { a, b, y1, t1 })
    }

    /// `T = log(1 + A/(B y1))/A`; infinite when `B = 0`.
    pub fn blow_up_time(&self) -> f64 {
        if self.b == 0.0 {
            return f64::INFINITY;
        }
        ln_1p(self.a / (self.b * self.y1)) / self.a
    }

    /// `z(t) = 1/((1/y1 + B/A) e^(-A(t-t1)) - B/A)` on `[t1, t1 + T)`.
    pub fn eval(&self, t: f64) -> Result<f64, AnalysisError> {
        let tau = t - self.t1;
        let blow_up = self.blow_up_time();
        if !(tau >= 0.0) || tau >= blow_up {
            return Err(AnalysisError::BeyondBlowUp {
                t,
                start: self.t1,
                blow_up_time: blow_up,
            });
        }
        if self.b == 0.0 {
            return Ok(self.y1 * exp(self.a * tau));
        }
        // denominator (1/y1) e^(-Aτ) + (B/A)(e^(-Aτ) - 1), kept free of cancellation
        let ratio = self.b / self.a;
        let decay = exp(-self.a * tau);
        let denom = decay / self.y1 + ratio * exp_m1(-self.a * tau);
        if !(denom > 0.0) {
            return Err(AnalysisError::BeyondBlowUp {
                t,
                start: self.t1,
                blow_up_time: blow_up,
            });
        }
        Ok(1.0 / denom)
    }
}

/// Classical fourth-order Runge–Kutta for a scalar autonomous ODE; returns
/// the value after `steps` equal steps from `t0` to `t1`.
pub fn rk4<F: Fn(f64) -> f64>(f: F, y0: f64, t0: f64, t1: f64, steps: usize) -> f64 {
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    for _ in 0..steps {
        let k1 = f(y);
        let k2 = f(y + 0.5 * h * k1);
        let k3 = f(y + 0.5 * h * k2);
        let k4 = f(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    y
}

/// Non-decreasing piecewise-linear map, extended linearly beyond its nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, AnalysisError> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(AnalysisError::Domain {
                quantity: "number of nodes of the piecewise-linear map",
                value: x.len().min(y.len()) as f64,
            });
        }
        if x.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(AnalysisError::Domain {
                quantity: "piecewise-linear abscissae (must increase)",
                value: f64::NAN,
            });
        }
        if let Some(w) = y.windows(2).find(|w| !(w[0] <= w[1])) {
            return Err(AnalysisError::Domain {
                quantity: "piecewise-linear values (must not decrease)",
                value: w[1] - w[0],
            });
        }
        Ok(PiecewiseLinear { x, y })
    }

    pub fn eval(&self, v: f64) -> f64 {
        let n = self.x.len();
        let k = self.x.partition_point(|&p| p < v).clamp(1, n - 1);
        let (x0, x1, y0, y1) = (self.x[k - 1], self.x[k], self.y[k - 1], self.y[k]);
        y0 + (v - x0) * (y1 - y0) / (x1 - x0)
    }
}

/// Outcome of [`gronwall_compare`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GronwallVerdict {
    pub passed: bool,
    /// `min_k (y_k - z_k + tol max(1, |z_k|))`.
    pub worst_margin: f64,
    pub worst_index: usize,
    /// The comparison solution at every sample time.
    pub z: Vec<f64>,
}

/// Integrates `z' = Φ(z)`, `z(t_0) = c` with RK4 through the sample times and
/// checks `y_k >= z_k - tol max(1, |z_k|)`.
pub fn gronwall_compare(
    times: &[f64],
    y: &[f64],
    phi: &PiecewiseLinear,
    c: f64,
    tol: f64,
) -> Result<GronwallVerdict, AnalysisError> {
    if times.len() != y.len() || times.is_empty() {
        return Err(AnalysisError::Domain {
            quantity: "number of samples",
            value: times.len().min(y.len()) as f64,
        });
    }
    let span = times[times.len() - 1] - times[0];
    let h_max = if span > 0.0 { span / 4000.0 } else { 1.0 };
    let mut z = Vec::with_capacity(times.len());
    let mut current = c;
    z.push(current);
    for w in times.windows(2) {
        let steps = libm::ceil((w[1] - w[0]) / h_max).max(1.0) as usize;
        current = rk4(|v| phi.eval(v), current, w[0], w[1], steps);
        z.push(current);
    }
    let mut worst = f64::INFINITY;
    let mut worst_index = 0;
    for (k, (&yk, &zk)) in y.iter().zip(&z).enumerate() {
        let m = yk - zk + tol * zk.abs().max(1.0);
        if m < worst {
            worst = m;
            worst_index = k;
        }
    }
    Ok(GronwallVerdict {
        passed: worst >= 0.0,
        worst_margin: worst,
        worst_index,
        z,
    })
}
