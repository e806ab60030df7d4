//! Model parameters and the feasibility algebra behind the blow-up criterion.
//!
//! The signal amplitude `f0` is admissible for the blow-up construction iff it
//! exceeds `(2n/alpha)(n-2)(n-alpha)`. Equivalently, the exponent `delta` of
//! the test function can be placed strictly between [`delta_lower_bound`] and
//! one. All inequalities are strict and checked without padding.

use alloc::vec::Vec;
use core::fmt;
use thiserror::Error;

use crate::math::sqrt;
use crate::transform::unit_sphere_area;

/// One violated admissibility condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub value: f64,
    pub requirement: &'static str,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} must {} (got {})", self.field, self.requirement, self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{}", join(.0))]
    Invalid(Vec<Violation>),
}

impl ParamError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            ParamError::Invalid(v) => v,
        }
    }

    fn single(field: &'static str, value: f64, requirement: &'static str) -> Self {
        ParamError::Invalid(alloc::vec![Violation {
            field,
            value,
            requirement,
        }])
    }
}

fn join(v: &[Violation]) -> alloc::string::String {
    use alloc::string::ToString;
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

fn check_dim_alpha(dim: u32, alpha: f64) -> Result<(), ParamError> {
    let mut v = Vec::new();
    if dim < 3 {
        v.push(Violation {
            field: "dim",
            value: dim as f64,
            requirement: "be at least 3",
        });
    }
    if !(alpha > 2.0) {
        v.push(Violation {
            field: "alpha",
            value: alpha,
            requirement: "exceed 2",
        });
    } else if !(alpha < dim as f64) {
        v.push(Violation {
            field: "alpha",
            value: alpha,
            requirement: "be < dim",
        });
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(ParamError::Invalid(v))
    }
}

/// Smallest amplitude (exclusive) for which the blow-up construction applies.
pub fn f0_threshold(dim: u32, alpha: f64) -> Result<f64, ParamError> {
    check_dim_alpha(dim, alpha)?;
    let n = dim as f64;
    Ok(2.0 * n / alpha * (n - 2.0) * (n - alpha))
}

/// `(n - alpha)(3n - 4) - f0`.
pub fn h_value(dim: u32, alpha: f64, f0: f64) -> Result<f64, ParamError> {
    check_dim_alpha(dim, alpha)?;
    if !(f0 > 0.0) {
        return Err(ParamError::single("f0", f0, "be positive"));
    }
    let n = dim as f64;
    Ok((n - alpha) * (3.0 * n - 4.0) - f0)
}

/// The quadratic `n² δ² + (n f0/(n-α) - 3n² + 4n) δ - f0` whose larger root
/// bounds the test-function exponent from below. Its value at `delta`
/// (times `xi^(-2/n)`) is the inner-branch constant of the test function.
pub fn delta_quadratic(dim: u32, alpha: f64, f0: f64, delta: f64) -> f64 {
    let n = dim as f64;
    n * n * delta * delta + (n * f0 / (n - alpha) - 3.0 * n * n + 4.0 * n) * delta - f0
}

/// Both candidates of the lower bound on `delta`: `(n-α)/n` and the larger
/// root of [`delta_quadratic`]. Neither is assumed to dominate.
pub fn delta_bound_candidates(dim: u32, alpha: f64, f0: f64) -> Result<(f64, f64), ParamError> {
    let h = h_value(dim, alpha, f0)?;
    let n = dim as f64;
    let first = (n - alpha) / n;
    let disc = h * h + 4.0 * f0 * (n - alpha) * (n - alpha);
    let second = (h + sqrt(disc)) / (2.0 * n * (n - alpha));
    Ok((first, second))
}

/// Strict lower bound on `delta`; `< 1` exactly when `f0` exceeds the threshold.
pub fn delta_lower_bound(dim: u32, alpha: f64, f0: f64) -> Result<f64, ParamError> {
    let (a, b) = delta_bound_candidates(dim, alpha, f0)?;
    Ok(a.max(b))
}

/// Physical and model parameters of the radial problem.
///
/// `radius` and `rho` place the smooth cut-off of the signal production
/// between `radius - rho` and `radius + rho`; `c0` is the plateau level of the
/// initial density on the unit ball.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SystemParams {
    pub dim: u32,
    pub alpha: f64,
    pub f0: f64,
    pub radius: f64,
    pub rho: f64,
    pub c0: f64,
}

impl SystemParams {
    /// Runs every admissibility check and reports all violations at once.
    pub fn validate(&self) -> Result<ValidatedParams, ParamError> {
        let mut v = match check_dim_alpha(self.dim, self.alpha) {
            Ok(()) => Vec::new(),
            Err(ParamError::Invalid(v)) => v,
        };
        if !(self.f0 > 0.0) {
            v.push(Violation {
                field: "f0",
                value: self.f0,
                requirement: "be positive",
            });
        }
        if !(self.radius > 0.0 && self.radius < 1.0) {
            v.push(Violation {
                field: "radius",
                value: self.radius,
                requirement: "lie in (0, 1)",
            });
        }
        if !(self.rho > 0.0) {
            v.push(Violation {
                field: "rho",
                value: self.rho,
                requirement: "be positive",
            });
        } else if !(self.rho < 0.5 * self.radius) {
            v.push(Violation {
                field: "rho",
                value: self.rho,
                requirement: "be < R/2",
            });
        }
        if !(self.c0 > 0.0) {
            v.push(Violation {
                field: "c0",
                value: self.c0,
                requirement: "be positive",
            });
        }
        if !v.is_empty() {
            return Err(ParamError::Invalid(v));
        }
        let threshold = f0_threshold(self.dim, self.alpha)?;
        let delta_bound = delta_lower_bound(self.dim, self.alpha, self.f0)?;
        let n = self.dim as f64;
        Ok(ValidatedParams {
            params: *self,
            mass: self.c0 * unit_sphere_area(self.dim) / n,
            threshold,
            delta_lower_bound: delta_bound,
            feasible: self.f0 > threshold,
        })
    }
}

/// [`SystemParams`] after validation, with derived quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ValidatedParams {
    pub params: SystemParams,
    /// Total mass of the plateau datum `c0` on the unit ball.
    pub mass: f64,
    pub threshold: f64,
    pub delta_lower_bound: f64,
    pub feasible: bool,
}

impl ValidatedParams {
    pub fn dim(&self) -> u32 {
        self.params.dim
    }

    /// Far-field value `n μ / |S_{n-1}|` of the mass function.
    pub fn mass_cap(&self) -> f64 {
        self.params.dim as f64 * self.mass / unit_sphere_area(self.params.dim)
    }

    /// Midpoint of `(delta_lower_bound, 1)`; `None` when infeasible.
    pub fn default_delta(&self) -> Option<f64> {
        self.feasible.then_some(0.5 * (self.delta_lower_bound + 1.0))
    }

    /// Admissible range of the test-function width parameter.
    pub fn xi_range(&self) -> (f64, f64) {
        (4.0 - 4.0 / self.params.dim as f64, 4.0)
    }

    /// Exclusive lower bound on `gamma`.
    pub fn gamma_floor(&self) -> f64 {
        4.0 / (self.params.radius - self.params.rho)
    }
}

/// Parameters `(xi, delta, gamma)` of the test function.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct TestFnParams {
    pub xi: f64,
    pub delta: f64,
    pub gamma: f64,
}

impl TestFnParams {
    pub const DEFAULT_XI: f64 = 4.0;

    /// `xi = 4`, `delta` at the midpoint of its range, `gamma` given.
    pub fn with_defaults(params: &ValidatedParams, gamma: f64) -> Result<Self, ParamError> {
        let delta = params
            .default_delta()
            .ok_or(ParamError::single("f0", params.params.f0, "exceed the blow-up threshold"))?;
        let tf = TestFnParams {
            xi: Self::DEFAULT_XI,
            delta,
            gamma,
        };
        tf.validate(params)?;
        Ok(tf)
    }

    pub fn validate(&self, params: &ValidatedParams) -> Result<(), ParamError> {
        let mut v = Vec::new();
        let (lo, hi) = params.xi_range();
        if !(self.xi > lo && self.xi <= hi) {
            v.push(Violation {
                field: "xi",
                value: self.xi,
                requirement: "lie in (4 - 4/n, 4]",
            });
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            v.push(Violation {
                field: "delta",
                value: self.delta,
                requirement: "lie in (0, 1)",
            });
        } else if !(self.delta > params.delta_lower_bound) {
            v.push(Violation {
                field: "delta",
                value: self.delta,
                requirement: "exceed the lower bound delta_lower_bound(n, alpha, f0)",
            });
        }
        let p = &params.params;
        if !(self.gamma > params.gamma_floor()) {
            v.push(Violation {
                field: "gamma",
                value: self.gamma,
                requirement: "exceed 4/(R - rho)",
            });
        } else if !((p.radius - p.rho) * self.gamma > self.xi) {
            v.push(Violation {
                field: "gamma",
                value: self.gamma,
                requirement: "satisfy (R - rho) gamma > xi",
            });
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(ParamError::Invalid(v))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

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
    fn threshold_examples() {
        assert!((f0_threshold(3, 2.5).unwrap() - 1.2).abs() < 1e-15);
        assert!((f0_threshold(4, 3.0).unwrap() - 16.0 / 3.0).abs() < 1e-14);
        assert!((f0_threshold(3, 2.999).unwrap() - 0.002_000_666_888_962_987_7).abs() < 1e-15);
    }

    #[test]
    fn threshold_domain_errors_name_field() {
        let e = f0_threshold(3, 3.0).unwrap_err();
        assert_eq!(e.violations()[0].field, "alpha");
        let e = f0_threshold(2, 2.5).unwrap_err();
        assert_eq!(e.violations()[0].field, "dim");
    }

    #[test]
    fn h_examples() {
        assert!((h_value(3, 2.5, 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(h_value(3, 2.5, 2.5).unwrap(), 0.0);
        assert!((h_value(4, 3.0, 1.0).unwrap() - 7.0).abs() < 1e-15);
    }

    #[test]
    fn delta_bound_examples() {
        let d = delta_lower_bound(3, 2.5, 2.0).unwrap();
        assert!((d - 2.0 / 3.0).abs() < 1e-15);
        let (first, second) = delta_bound_candidates(3, 2.5, 2.0).unwrap();
        assert!(second > first);
        // at the threshold the bound is exactly one
        assert!((delta_lower_bound(3, 2.5, 1.2).unwrap() - 1.0).abs() < 1e-15);
        let d = delta_lower_bound(3, 2.5, 100.0).unwrap();
        assert!((d - 0.170_492_973_187_764_7).abs() < 1e-12);
        assert!(d > 1.0 / 6.0);
    }

    #[test]
    fn second_candidate_is_root_of_quadratic() {
        for &(n, a, f0) in &[(3, 2.5, 2.0), (4, 3.0, 9.0), (6, 2.2, 40.0), (5, 4.9, 0.3)] {
            let (_, root) = delta_bound_candidates(n, a, f0).unwrap();
            let nn = n as f64;
            let scale = nn * nn * root * root + f0;
            assert!(delta_quadratic(n, a, f0, root).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn scenario_is_valid_and_feasible() {
        let v = scenario().validate().unwrap();
        assert!(v.feasible);
        assert!((v.threshold - 1.2).abs() < 1e-15);
        assert!((v.mass_cap() - 1.0).abs() < 1e-14);
        assert!((v.default_delta().unwrap() - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_exclusions() {
        let mut p = scenario();
        p.rho = 0.25;
        let e = p.validate().unwrap_err();
        assert!(e.to_string().contains("rho must be < R/2"), "{e}");
        let mut p = scenario();
        p.alpha = 2.0;
        let e = p.validate().unwrap_err();
        assert!(e.to_string().contains("alpha must exceed 2"), "{e}");
    }

    #[test]
    fn all_violations_reported() {
        let p = SystemParams {
            dim: 3,
            alpha: 1.0,
            f0: -1.0,
            radius: 1.5,
            rho: 0.0,
            c0: 0.0,
        };
        let e = p.validate().unwrap_err();
        let fields: Vec<_> = e.violations().iter().map(|v| v.field).collect();
        assert_eq!(fields, ["alpha", "f0", "radius", "rho", "c0"]);
    }

    #[test]
    fn infeasible_is_flagged_not_rejected() {
        let mut p = scenario();
        p.f0 = 1.0;
        let v = p.validate().unwrap();
        assert!(!v.feasible);
        assert!(v.delta_lower_bound >= 1.0);
        assert!(v.default_delta().is_none());
    }

    #[test]
    fn test_fn_params_checks() {
        let v = scenario().validate().unwrap();
        let tf = TestFnParams::with_defaults(&v, 20.0).unwrap();
        assert_eq!(tf.xi, 4.0);
        let bad = TestFnParams {
            xi: 2.5,
            delta: 0.5,
            gamma: 10.0,
        };
        let e = bad.validate(&v).unwrap_err();
        let fields: Vec<_> = e.violations().iter().map(|v| v.field).collect();
        assert_eq!(fields, ["xi", "delta", "gamma"]);
    }
}
