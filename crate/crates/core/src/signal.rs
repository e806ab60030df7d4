//! External signal production `f(r)`, its enclosed integral
//! `F(s) = ∫_0^{s^(1/n)} f(r) r^(n-1) dr`, the derivative `F_s(s) = f(s^(1/n))/n`,
//! and the cut-off family `χ_ε`.
//!
//! `f` is the truncated power law `f0 r^(-α)`, switched off smoothly by a
//! monotone bridge between two radii. By default the bridge sits between
//! `R - ρ` and `R + ρ` in `r`, so in `s = r^n` the breakpoints are `(R ∓ ρ)^n`.
//! [`Breakpoints::LiteralS`] instead puts them at `s = R ∓ ρ`, which is the
//! convention under which the closed form `F(R-ρ) = f0/(n-α) (R-ρ)^((n-α)/n)`
//! holds; use it when reproducing the test-function estimates.

use alloc::sync::Arc;
use alloc::vec::Vec;
use thiserror::Error;

use crate::math::{exp, ln, powf, sqrt};
use crate::params::SystemParams;
use crate::quadrature::{integrate, QuadError, QuadOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error("{quantity} must be positive (got {value})")]
    Domain { quantity: &'static str, value: f64 },
    #[error("cut-off parameter epsilon must lie in (0, 1) (got {0})")]
    Epsilon(f64),
    #[error("signal integral: {0}")]
    Quadrature(#[from] QuadError),
}

/// Shape of the monotone switch between the power law and zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum BridgeKind {
    /// `6y⁵ - 15y⁴ + 10y³`: C², closed-form extrema.
    #[default]
    QuinticSmoothstep,
    /// `ψ(y)/(ψ(y)+ψ(1-y))` with `ψ(y) = e^(-1/y)`: C^∞.
    ExponentialBump,
}

/// Where the bridge sits; see the module docs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Breakpoints {
    #[default]
    Radial,
    LiteralS,
}

/// Quintic smoothstep and its first two derivatives on `[0, 1]`.
#[inline]
pub fn smoothstep(y: f64) -> (f64, f64, f64) {
    if y <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if y >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let v = y * y * y * (10.0 + y * (-15.0 + 6.0 * y));
    let d1 = 30.0 * y * y * (1.0 - y) * (1.0 - y);
    let d2 = 60.0 * y * (1.0 - y) * (1.0 - 2.0 * y);
    (v, d1, d2)
}

fn exponential_step(y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    if y >= 1.0 {
        return 1.0;
    }
    let p = exp(-1.0 / y);
    let q = exp(-1.0 / (1.0 - y));
    p / (p + q)
}

const CACHE_ANCHORS: usize = 2048;

/// Monotone cubic Hermite table of `F` over the bridge interval in `s`.
#[derive(Debug)]
struct BridgeTable {
    s_lo: f64,
    log_step: f64,
    s: Vec<f64>,
    value: Vec<f64>,
    slope: Vec<f64>,
}

impl BridgeTable {
    fn eval(&self, s: f64) -> f64 {
        let last = self.s.len() - 1;
        let k = ((ln(s / self.s_lo) / self.log_step) as usize).min(last - 1);
        // log-spacing index may be off by one from rounding
        let k = if s < self.s[k] && k > 0 {
            k - 1
        } else if s > self.s[k + 1] && k + 1 < last {
            k + 1
        } else {
            k
        };
        let h = self.s[k + 1] - self.s[k];
        let t = (s - self.s[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.value[k] + h10 * h * self.slope[k] + h01 * self.value[k + 1] + h11 * h * self.slope[k + 1]
    }
}

/// The prototypical signal production and its radial integrals.
///
/// Cheap to clone: the interpolation table is shared.
#[derive(Debug, Clone)]
pub struct SignalProfile {
    dim: u32,
    f0: f64,
    alpha: f64,
    radius: f64,
    rho: f64,
    bridge: BridgeKind,
    breakpoints: Breakpoints,
    r_lo: f64,
    r_hi: f64,
    s_lo: f64,
    s_hi: f64,
    integral_lo: f64,
    integral_max: f64,
    table: Option<Arc<BridgeTable>>,
}

impl SignalProfile {
    /// Default profile: quintic bridge, radial breakpoints.
    pub fn new(params: &SystemParams) -> Result<Self, SignalError> {
        Self::with_options(params, BridgeKind::default(), Breakpoints::default())
    }

    pub fn with_options(
        params: &SystemParams,
        bridge: BridgeKind,
        breakpoints: Breakpoints,
    ) -> Result<Self, SignalError> {
        let n = params.dim as f64;
        let (r_lo, r_hi) = match breakpoints {
            Breakpoints::Radial => (params.radius - params.rho, params.radius + params.rho),
            Breakpoints::LiteralS => (
                powf(params.radius - params.rho, 1.0 / n),
                powf(params.radius + params.rho, 1.0 / n),
            ),
        };
        let s_lo = powf(r_lo, n);
        let s_hi = powf(r_hi, n);
        let mut profile = SignalProfile {
            dim: params.dim,
            f0: params.f0,
            alpha: params.alpha,
            radius: params.radius,
            rho: params.rho,
            bridge,
            breakpoints,
            r_lo,
            r_hi,
            s_lo,
            s_hi,
            integral_lo: params.f0 / (n - params.alpha) * powf(s_lo, (n - params.alpha) / n),
            integral_max: 0.0,
            table: None,
        };
        profile.integral_max = profile.bridge_integral(r_lo, r_hi)? + profile.integral_lo;
        profile.table = profile.build_table()?.map(Arc::new);
        Ok(profile)
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn bridge(&self) -> BridgeKind {
        self.bridge
    }

    pub fn breakpoints(&self) -> Breakpoints {
        self.breakpoints
    }

    /// Bridge interval `[s_lo, s_hi]` in the mass variable.
    pub fn bridge_s_range(&self) -> (f64, f64) {
        (self.s_lo, self.s_hi)
    }

    /// Whether `F` is served from the interpolation table.
    pub fn is_cached(&self) -> bool {
        self.table.is_some()
    }

    fn production_unchecked(&self, r: f64) -> f64 {
        if r <= self.r_lo {
            return self.f0 * powf(r, -self.alpha);
        }
        if r >= self.r_hi {
            return 0.0;
        }
        let y = (self.r_hi - r) / (self.r_hi - self.r_lo);
        let switch = match self.bridge {
            BridgeKind::QuinticSmoothstep => smoothstep(y).0,
            BridgeKind::ExponentialBump => exponential_step(y),
        };
        self.f0 * powf(r, -self.alpha) * switch
    }

    /// `f(r)`.
    pub fn production(&self, r: f64) -> Result<f64, SignalError> {
        if !(r > 0.0) {
            return Err(SignalError::Domain {
                quantity: "radius r",
                value: r,
            });
        }
        Ok(self.production_unchecked(r))
    }

    fn bridge_integral(&self, r_from: f64, r_to: f64) -> Result<f64, SignalError> {
        let n1 = self.dim as i32 - 1;
        let opts = QuadOptions {
            rel_tol: 1e-13,
            ..QuadOptions::default()
        };
        let res = integrate(
            |r| self.production_unchecked(r) * crate::math::powi(r, n1),
            r_from,
            r_to,
            &opts,
        )?;
        Ok(res.value)
    }

    fn build_table(&self) -> Result<Option<BridgeTable>, SignalError> {
        let n = self.dim as f64;
        let log_step = ln(self.s_hi / self.s_lo) / (CACHE_ANCHORS - 1) as f64;
        let s: Vec<f64> = (0..CACHE_ANCHORS)
            .map(|k| match k {
                0 => self.s_lo,
                k if k == CACHE_ANCHORS - 1 => self.s_hi,
                k => self.s_lo * exp(k as f64 * log_step),
            })
            .collect();
        let mut value = Vec::with_capacity(CACHE_ANCHORS);
        let mut acc = self.integral_lo;
        value.push(acc);
        for w in s.windows(2) {
            acc += self.bridge_integral(powf(w[0], 1.0 / n), powf(w[1], 1.0 / n))?;
            value.push(acc);
        }
        let mut slope: Vec<f64> = s
            .iter()
            .map(|&x| self.production_unchecked(powf(x, 1.0 / n)) / n)
            .collect();
        // Fritsch–Carlson limiter keeps the interpolant monotone.
        for k in 0..CACHE_ANCHORS - 1 {
            let secant = (value[k + 1] - value[k]) / (s[k + 1] - s[k]);
            if secant <= 0.0 {
                slope[k] = 0.0;
                slope[k + 1] = 0.0;
                continue;
            }
            let a = slope[k] / secant;
            let b = slope[k + 1] / secant;
            let r2 = a * a + b * b;
            if r2 > 9.0 {
                let tau = 3.0 / sqrt(r2);
                slope[k] = tau * a * secant;
                slope[k + 1] = tau * b * secant;
            }
        }
        let table = BridgeTable {
            s_lo: self.s_lo,
            log_step,
            s,
            value,
            slope,
        };
        // spot-check the interpolant against direct quadrature
        for k in (0..CACHE_ANCHORS - 1).step_by(31) {
            let mid = 0.5 * (table.s[k] + table.s[k + 1]);
            let direct = self.integral_lo + self.bridge_integral(self.r_lo, powf(mid, 1.0 / n))?;
            if (table.eval(mid) - direct).abs() > 1e-10 * direct.abs().max(1e-300) {
                return Ok(None);
            }
        }
        Ok(Some(table))
    }

    /// `F(s)`.
    pub fn integral(&self, s: f64) -> Result<f64, SignalError> {
        if !(s >= 0.0) {
            return Err(SignalError::Domain {
                quantity: "mass coordinate s",
                value: s,
            });
        }
        Ok(self.integral_unchecked(s))
    }

    pub(crate) fn integral_unchecked(&self, s: f64) -> f64 {
        if s <= self.s_lo {
            let n = self.dim as f64;
            return self.f0 / (n - self.alpha) * powf(s, (n - self.alpha) / n);
        }
        if s >= self.s_hi {
            return self.integral_max;
        }
        match &self.table {
            Some(t) => t.eval(s),
            None => self.integral_direct_bridge(s).unwrap_or(f64::NAN),
        }
    }

    fn integral_direct_bridge(&self, s: f64) -> Result<f64, SignalError> {
        let r = powf(s, 1.0 / self.dim as f64).min(self.r_hi);
        Ok(self.integral_lo + self.bridge_integral(self.r_lo, r)?)
    }

    /// `F(s)` by quadrature, bypassing the table.
    pub fn integral_direct(&self, s: f64) -> Result<f64, SignalError> {
        if !(s >= 0.0) {
            return Err(SignalError::Domain {
                quantity: "mass coordinate s",
                value: s,
            });
        }
        if s <= self.s_lo || s >= self.s_hi {
            return Ok(self.integral_unchecked(s));
        }
        self.integral_direct_bridge(s)
    }

    /// `F_s(s) = f(s^(1/n))/n`.
    pub fn integral_derivative(&self, s: f64) -> Result<f64, SignalError> {
        if !(s > 0.0) {
            return Err(SignalError::Domain {
                quantity: "mass coordinate s",
                value: s,
            });
        }
        Ok(self.integral_derivative_unchecked(s))
    }

    pub(crate) fn integral_derivative_unchecked(&self, s: f64) -> f64 {
        let n = self.dim as f64;
        self.production_unchecked(powf(s, 1.0 / n)) / n
    }

    /// `F(∞)`, attained for `s ≥ s_hi`.
    pub fn integral_limit(&self) -> f64 {
        self.integral_max
    }

    /// `f0/(n-α) (R+ρ)^((n-α)/n)`, the stated upper bound on `F(∞)`.
    pub fn integral_limit_bound(&self) -> f64 {
        let n = self.dim as f64;
        self.f0 / (n - self.alpha) * powf(self.radius + self.rho, (n - self.alpha) / n)
    }
}

/// Sum of the suprema of `|χ'|` and `|χ''|` for the quintic base cut-off
/// `χ(x) = S(2x - 1)`: `15/4 + 40/√3`.
pub fn c_chi() -> f64 {
    CutoffSpec::SUP_D1 + CutoffSpec::SUP_D2
}

/// `χ_ε(s) = χ(s/ε)`, vanishing on `[0, ε/2]` and equal to one on `[ε, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSpec {
    epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffValue {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl CutoffSpec {
    /// `sup |χ'| = 2 · max S' = 2 · 15/8`.
    pub const SUP_D1: f64 = 3.75;
    /// `sup |χ''| = 4 · max |S''| = 4 · 10/√3`.
    pub const SUP_D2: f64 = 23.094_010_767_585_03;

    pub fn new(epsilon: f64) -> Result<Self, SignalError> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(SignalError::Epsilon(epsilon));
        }
        Ok(CutoffSpec { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn c_chi(&self) -> f64 {
        c_chi()
    }

    pub fn eval(&self, s: f64) -> CutoffValue {
        let x = s / self.epsilon;
        if x <= 0.5 {
            return CutoffValue {
                value: 0.0,
                d1: 0.0,
                d2: 0.0,
            };
        }
        if x >= 1.0 {
            return CutoffValue {
                value: 1.0,
                d1: 0.0,
                d2: 0.0,
            };
        }
        let (v, d1, d2) = smoothstep(2.0 * x - 1.0);
        CutoffValue {
            value: v,
            d1: 2.0 * d1 / self.epsilon,
            d2: 4.0 * d2 / (self.epsilon * self.epsilon),
        }
    }

    #[inline]
    pub fn value(&self, s: f64) -> f64 {
        self.eval(s).value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario() -> SystemParams {
        SystemParams {
            dim: 3,
            alpha: 2.5,
            f0: 2.0,
            radius: 0.5,
            rho: 0.1,
            c0: 1.0,
        }
    }

    #[test]
    fn production_examples() {
        let p = SignalProfile::new(&scenario()).unwrap();
        assert!((p.production(0.2).unwrap() - 111.803_398_874_989_48).abs() < 1e-10);
        assert_eq!(p.production(0.7).unwrap(), 0.0);
        assert!((p.production(0.5).unwrap() - 5.656_854_249_492_38).abs() < 1e-12);
        assert!(p.production(0.0).is_err());
        assert!(p.production(-1.0).is_err());
    }

    #[test]
    fn production_monotone_across_bridge() {
        for bridge in [BridgeKind::QuinticSmoothstep, BridgeKind::ExponentialBump] {
            let p = SignalProfile::with_options(&scenario(), bridge, Breakpoints::Radial).unwrap();
            let mut prev = f64::INFINITY;
            for k in 1..=20_000 {
                let r = 2.0 * k as f64 / 20_000.0;
                let v = p.production(r).unwrap();
                assert!(v <= prev + 1e-12 * prev.abs().min(1e12), "r = {r}");
                prev = v;
            }
        }
    }

    #[test]
    fn integral_examples() {
        let p = SignalProfile::new(&scenario()).unwrap();
        assert!(p.is_cached());
        assert!((p.integral(0.001).unwrap() - 1.264_911_064_067_351_7).abs() < 1e-12);
        // mpmath oracle
        assert!((p.integral(0.3).unwrap() - 2.826_398_320_242_158_7).abs() < 1e-10 * 2.83);
        assert_eq!(p.integral(0.3).unwrap(), p.integral(5.0).unwrap());
        assert_eq!(p.integral(0.216 + 1e-9).unwrap(), p.integral_limit());
        assert!(p.integral_limit() <= p.integral_limit_bound());
        assert!((p.integral_limit_bound() - 3.673_543_608_673_781).abs() < 1e-12);
        assert_eq!(p.integral(0.0).unwrap(), 0.0);
        assert!(p.integral(-1e-3).is_err());
    }

    #[test]
    fn cached_matches_direct() {
        let p = SignalProfile::new(&scenario()).unwrap();
        let (lo, hi) = p.bridge_s_range();
        for k in 0..=500 {
            let s = lo + (hi - lo) * k as f64 / 500.0 * 0.999_7;
            let a = p.integral(s).unwrap();
            let b = p.integral_direct(s).unwrap();
            assert!((a - b).abs() <= 1e-10 * b, "s = {s}: {a} vs {b}");
        }
    }

    #[test]
    fn derivative_examples() {
        let p = SignalProfile::new(&scenario()).unwrap();
        assert!((p.integral_derivative(0.001).unwrap() - 210.818_510_677_891_95).abs() < 1e-9);
        assert_eq!(p.integral_derivative(0.3).unwrap(), 0.0);
        let s = 0.008;
        let expect = p.production(powf(s, 1.0 / 3.0)).unwrap() / 3.0;
        assert_eq!(p.integral_derivative(s).unwrap(), expect);
        assert!((expect - 37.267_799_624_996_5).abs() < 1e-9);
        assert!(p.integral_derivative(0.0).is_err());
    }

    #[test]
    fn literal_breakpoints_use_s_labels() {
        let p = SignalProfile::with_options(&scenario(), BridgeKind::QuinticSmoothstep, Breakpoints::LiteralS)
            .unwrap();
        let (lo, hi) = p.bridge_s_range();
        assert!((lo - 0.4).abs() < 1e-14 && (hi - 0.6).abs() < 1e-14);
        // closed form holds at s = R - rho
        let closed = 2.0 / 0.5 * powf(0.4, 0.5 / 3.0);
        assert!((p.integral(0.4).unwrap() - closed).abs() < 1e-14);
        assert_eq!(p.integral_derivative(0.7).unwrap(), 0.0);
    }

    #[test]
    fn c_chi_constants() {
        assert!((CutoffSpec::SUP_D2 - 40.0 / sqrt(3.0)).abs() < 1e-13);
        assert!((c_chi() - 26.844_010_767_585_03).abs() < 1e-12);
        // dense scan of the base cut-off derivatives
        let (mut m1, mut m2) = (0.0f64, 0.0f64);
        let chi = CutoffSpec::new(0.5).unwrap(); // χ_ε' = χ'/ε, so rescale by ε
        for k in 0..=200_000 {
            let s = 0.25 + 0.25 * k as f64 / 200_000.0;
            let c = chi.eval(s);
            m1 = m1.max(c.d1.abs() * 0.5);
            m2 = m2.max(c.d2.abs() * 0.25);
        }
        assert!((m1 - 3.75).abs() < 1e-6);
        assert!((m2 - CutoffSpec::SUP_D2).abs() < 1e-4);
    }

    #[test]
    fn cutoff_examples() {
        let eps = 0.01;
        let c = CutoffSpec::new(eps).unwrap();
        assert_eq!(c.eval(eps / 2.0), CutoffValue { value: 0.0, d1: 0.0, d2: 0.0 });
        assert_eq!(c.eval(eps), CutoffValue { value: 1.0, d1: 0.0, d2: 0.0 });
        assert!((c.eval(0.75 * eps).value - 0.5).abs() < 1e-15);
        assert!(CutoffSpec::new(1.0).is_err());
        assert!(CutoffSpec::new(0.0).is_err());
    }
}
