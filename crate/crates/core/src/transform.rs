//! Mass-accumulation transform `W(s) = n ∫_0^{s^(1/n)} u(r) r^(n-1) dr` and
//! its inverse `u(r) = W_s(r^n)`, with a Dirac atom of mass
//! `|S_{n-1}|/n · W(0+)` at the origin.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
use thiserror::Error;

use crate::math::{powf, powi, sqrt};
use crate::mesh::Mesh;
use crate::quadrature::{integrate_with_breaks, QuadError, QuadOptions};

/// Surface area `2π^(n/2)/Γ(n/2)` of the unit sphere in `R^n`.
pub fn unit_sphere_area(dim: u32) -> f64 {
    // Γ(n/2) by the recurrence from Γ(1) = 1 or Γ(1/2) = √π
    let (mut gamma, mut x) = if dim.is_multiple_of(2) { (1.0, 1.0) } else { (sqrt(PI), 0.5) };
    let half = dim as f64 / 2.0;
    while x < half {
        gamma *= x;
        x += 1.0;
    }
    2.0 * powf(PI, half) / gamma
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("mass integral: {0}")]
    Quadrature(#[from] QuadError),
    #[error("invalid density: {0}")]
    InvalidDensity(&'static str),
    #[error("mass function is decreasing at node {index} (s = {s}): drop {drop:e}")]
    NonMonotone { index: usize, s: f64, drop: f64 },
    #[error("malformed mass function: {0}")]
    Malformed(&'static str),
}

/// Radially symmetric cell density `u(r) >= 0` with compact support.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields))]
pub enum RadialDensity {
    /// `c0` on `[0, radius]`, zero outside.
    Plateau { c0: f64, radius: f64 },
    /// Piecewise linear through `(r[k], u[k])`, constant `u[0]` below `r[0]`,
    /// zero beyond the last node.
    Tabulated { r: Vec<f64>, u: Vec<f64> },
}

impl RadialDensity {
    /// The initial datum `u0 ≡ c0` on the closed unit ball.
    pub fn unit_plateau(c0: f64) -> Self {
        RadialDensity::Plateau { c0, radius: 1.0 }
    }

    pub fn validate(&self) -> Result<(), TransformError> {
        match self {
            RadialDensity::Plateau { c0, radius } => {
                if !(*c0 >= 0.0 && c0.is_finite()) {
                    return Err(TransformError::InvalidDensity("plateau level must be finite and non-negative"));
                }
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(TransformError::InvalidDensity("plateau radius must be positive"));
                }
            }
            RadialDensity::Tabulated { r, u } => {
                if r.len() != u.len() || r.len() < 2 {
                    return Err(TransformError::InvalidDensity("table needs at least two (r, u) pairs of equal length"));
                }
                if !(r[0] >= 0.0) || r.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(TransformError::InvalidDensity("radii must be non-negative and strictly increasing"));
                }
                if u.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return Err(TransformError::InvalidDensity("density values must be finite and non-negative"));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            RadialDensity::Plateau { c0, radius } => {
                if r <= *radius {
                    *c0
                } else {
                    0.0
                }
            }
            RadialDensity::Tabulated { r: rs, u } => {
                if r <= rs[0] {
                    return u[0];
                }
                let last = rs.len() - 1;
                if r > rs[last] {
                    return 0.0;
                }
                let k = rs.partition_point(|&x| x < r).clamp(1, last);
                let t = (r - rs[k - 1]) / (rs[k] - rs[k - 1]);
                u[k - 1] + t * (u[k] - u[k - 1])
            }
        }
    }

    pub fn support_radius(&self) -> f64 {
        match self {
            RadialDensity::Plateau { radius, .. } => *radius,
            RadialDensity::Tabulated { r, .. } => r[r.len() - 1],
        }
    }

    fn kinks(&self) -> Vec<f64> {
        match self {
            RadialDensity::Plateau { radius, .. } => alloc::vec![*radius],
            RadialDensity::Tabulated { r, .. } => r.clone(),
        }
    }

    /// `W_0(s) = n ∫_0^{s^(1/n)} u(r) r^(n-1) dr` at a single point.
    pub fn mass_function(&self, dim: u32, s: f64) -> Result<f64, TransformError> {
        self.validate()?;
        let r = powf(s.max(0.0), 1.0 / dim as f64).min(self.support_radius());
        Ok(dim as f64 * self.radial_moment(dim, 0.0, r)?)
    }

    /// `∫_a^b u(r) r^(n-1) dr`.
    fn radial_moment(&self, dim: u32, a: f64, b: f64) -> Result<f64, TransformError> {
        if b <= a {
            return Ok(0.0);
        }
        let n1 = dim as i32 - 1;
        let opts = QuadOptions {
            rel_tol: 1e-13,
            abs_tol: 1e-300,
            ..QuadOptions::default()
        };
        let res = integrate_with_breaks(|r| self.eval(r) * powi(r, n1), a, b, &self.kinks(), &opts)?;
        Ok(res.value)
    }
}

/// `μ = |S_{n-1}| ∫_0^∞ u(r) r^(n-1) dr`.
pub fn total_mass(u0: &RadialDensity, dim: u32) -> Result<f64, TransformError> {
    u0.validate()?;
    Ok(unit_sphere_area(dim) * u0.radial_moment(dim, 0.0, u0.support_radius())?)
}

/// Far-field value `n μ / |S_{n-1}|` of the mass function.
pub fn mass_cap(mass: f64, dim: u32) -> f64 {
    dim as f64 * mass / unit_sphere_area(dim)
}

/// `W(·, t)` sampled on a mesh, together with its far-field value.
#[derive(Debug, Clone, PartialEq)]
pub struct MassFunction {
    nodes: Arc<[f64]>,
    values: Vec<f64>,
    time: f64,
    cap: f64,
}

/// Worst violations of the mass-function invariants on one snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantReport {
    /// `W(0)`, which must vanish.
    pub origin: f64,
    pub min_value: f64,
    pub max_value: f64,
    /// `min_i (W_{i+1} - W_i)` and the left node of that difference.
    pub min_increment: f64,
    pub min_increment_at: usize,
}

impl InvariantReport {
    /// Whether `0 <= W <= cap (1 + rel_cap)` and increments stay above `-rel_mono · cap`.
    pub fn holds(&self, cap: f64, rel_cap: f64, rel_mono: f64) -> bool {
        self.origin == 0.0
            && self.min_value >= 0.0
            && self.max_value <= cap * (1.0 + rel_cap)
            && self.min_increment >= -rel_mono * cap
    }
}

impl MassFunction {
    /// Wraps raw samples; only the shape is checked here, see [`Self::invariants`].
    pub fn new(nodes: Arc<[f64]>, values: Vec<f64>, time: f64, cap: f64) -> Result<Self, TransformError> {
        if nodes.len() != values.len() || nodes.len() < 4 {
            return Err(TransformError::Malformed("nodes and values must have equal length of at least 4"));
        }
        if nodes[0] != 0.0 || nodes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(TransformError::Malformed("nodes must start at 0 and increase strictly"));
        }
        if values.iter().any(|v| !v.is_finite()) || !time.is_finite() || !(cap >= 0.0 && cap.is_finite()) {
            return Err(TransformError::Malformed("values, time and cap must be finite"));
        }
        Ok(MassFunction {
            nodes,
            values,
            time,
            cap,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn shared_nodes(&self) -> Arc<[f64]> {
        self.nodes.clone()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn s_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    /// Piecewise-linear interpolation; `cap` beyond `s_max`.
    pub fn eval(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let last = self.nodes.len() - 1;
        if s >= self.nodes[last] {
            return if s == self.nodes[last] { self.values[last] } else { self.cap };
        }
        let k = self.nodes.partition_point(|&x| x < s).clamp(1, last);
        let (s0, s1) = (self.nodes[k - 1], self.nodes[k]);
        let t = (s - s0) / (s1 - s0);
        self.values[k - 1] + t * (self.values[k] - self.values[k - 1])
    }

    pub fn invariants(&self) -> InvariantReport {
        let mut r = InvariantReport {
            origin: self.values[0],
            min_value: f64::INFINITY,
            max_value: f64::NEG_INFINITY,
            min_increment: f64::INFINITY,
            min_increment_at: 0,
        };
        for (i, &v) in self.values.iter().enumerate() {
            r.min_value = r.min_value.min(v);
            r.max_value = r.max_value.max(v);
            if i + 1 < self.values.len() {
                let d = self.values[i + 1] - v;
                if d < r.min_increment {
                    r.min_increment = d;
                    r.min_increment_at = i;
                }
            }
        }
        r
    }

    /// Estimate of `W(0+)` from the three smallest positive nodes.
    pub fn origin_limit(&self) -> OriginFit {
        origin_fit(
            [self.nodes[1], self.nodes[2], self.nodes[3]],
            [self.values[1], self.values[2], self.values[3]],
        )
    }
}

/// Fit `W(s) ≈ jump + slope · s^exponent` near the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct OriginFit {
    pub jump: f64,
    pub slope: f64,
    pub exponent: f64,
}

const MIN_EXPONENT: f64 = 1e-3;

fn origin_fit(s: [f64; 3], w: [f64; 3]) -> OriginFit {
    let d1 = w[1] - w[0];
    let d2 = w[2] - w[1];
    if !(d1 > 0.0) || !(d2 >= 0.0) {
        return OriginFit {
            jump: w[0].max(0.0),
            slope: 0.0,
            exponent: 1.0,
        };
    }
    let target = d2 / d1;
    let ratio = |q: f64| (powf(s[2], q) - powf(s[1], q)) / (powf(s[1], q) - powf(s[0], q));
    // the increment ratio grows with q
    let q = if target <= ratio(MIN_EXPONENT) {
        MIN_EXPONENT
    } else if target >= ratio(1.0) {
        1.0
    } else {
        let (mut lo, mut hi) = (MIN_EXPONENT, 1.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if ratio(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let slope = d1 / (powf(s[1], q) - powf(s[0], q));
    let jump = (w[0] - slope * powf(s[0], q)).clamp(0.0, w[0].max(0.0));
    OriginFit {
        jump,
        slope,
        exponent: q,
    }
}

/// Point mass at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DiracAtom {
    pub mass: f64,
}

impl DiracAtom {
    /// `|S_{n-1}|/n · W(0+)`.
    pub fn from_origin_limit(dim: u32, w0_plus: f64) -> Self {
        DiracAtom {
            mass: unit_sphere_area(dim) / dim as f64 * w0_plus,
        }
    }
}

/// `W_0(s_i) = n ∫_0^{s_i^(1/n)} u0(r) r^(n-1) dr` on the mesh.
pub fn w0_from_density(u0: &RadialDensity, dim: u32, mesh: &Mesh) -> Result<MassFunction, TransformError> {
    u0.validate()?;
    let n = dim as f64;
    let support = u0.support_radius();
    let mut values = Vec::with_capacity(mesh.nodes().len());
    values.push(0.0);
    let mut acc = 0.0;
    let mut r_prev = 0.0f64;
    for &s in &mesh.nodes()[1..] {
        let r = powf(s, 1.0 / n);
        acc += u0.radial_moment(dim, r_prev.min(support), r.min(support))?;
        values.push(n * acc);
        r_prev = r;
    }
    let cap = mass_cap(total_mass(u0, dim)?, dim);
    MassFunction::new(mesh.shared_nodes(), values, 0.0, cap)
}

/// Density samples and origin atom recovered from a mass function.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    /// Radii `s_i^(1/n)` of the interior nodes.
    pub radii: Vec<f64>,
    /// `u(r_i) = W_s(s_i)`.
    pub density: Vec<f64>,
    pub origin: OriginFit,
    pub atom: DiracAtom,
    /// `|S_{n-1}| ∫ u r^(n-1) dr = |S_{n-1}|/n · (W(s_max) - W(0+))`.
    pub continuous_mass: f64,
}

/// Inverse transform. Fails when `w` decreases by more than `1e-8 · cap`.
pub fn reconstruct(w: &MassFunction, dim: u32) -> Result<Reconstruction, TransformError> {
    let inv = w.invariants();
    if inv.min_increment < -1e-8 * w.cap().max(f64::MIN_POSITIVE) {
        let i = inv.min_increment_at;
        return Err(TransformError::NonMonotone {
            index: i,
            s: w.nodes()[i],
            drop: -inv.min_increment,
        });
    }
    let s = w.nodes();
    let v = w.values();
    let n = dim as f64;
    let mut radii = Vec::with_capacity(s.len() - 2);
    let mut density = Vec::with_capacity(s.len() - 2);
    for i in 1..s.len() - 1 {
        let hm = s[i] - s[i - 1];
        let hp = s[i + 1] - s[i];
        // second-order three-point derivative on a non-uniform mesh
        let d = -hp / (hm * (hm + hp)) * v[i - 1] + (hp - hm) / (hm * hp) * v[i] + hm / (hp * (hm + hp)) * v[i + 1];
        radii.push(powf(s[i], 1.0 / n));
        density.push(d);
    }
    let origin = w.origin_limit();
    let area = unit_sphere_area(dim);
    Ok(Reconstruction {
        radii,
        density,
        origin,
        atom: DiracAtom::from_origin_limit(dim, origin.jump),
        continuous_mass: area / n * (v[v.len() - 1] - origin.jump),
    })
}
