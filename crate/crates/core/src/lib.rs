//! Numerical laboratory for immediate blow-up in the radial parabolic–elliptic
//! Keller–Segel system with a singular external signal source.
//!
//! The cell density `u` is replaced by the rescaled enclosed mass
//! `W(s, t) = n ∫_0^{s^(1/n)} u(r, t) r^(n-1) dr`, which solves the scalar
//! degenerate equation
//!
//! ```text
//! W_t = n² s^((2n-2)/n) W_ss + χ_ε(s) (W + n F(s)) W_s,   W(0) = 0,  W(∞) = n μ / |S_{n-1}|
//! ```
//!
//! with `F` the enclosed signal production. Everything here is `no_std` with
//! `alloc`; file formats and the command line live in the `kslab` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod math;
pub mod mesh;
pub mod params;
pub mod quadrature;
pub mod signal;
pub mod solver;
pub mod transform;

pub use mesh::{build_mesh, Mesh, MeshError};
pub use params::{
    delta_lower_bound, f0_threshold, h_value, ParamError, SystemParams, TestFnParams, ValidatedParams,
};
pub use signal::{c_chi, BridgeKind, Breakpoints, CutoffSpec, SignalError, SignalProfile};
pub use transform::{
    reconstruct, total_mass, unit_sphere_area, w0_from_density, DiracAtom, MassFunction, RadialDensity,
    TransformError,
};
