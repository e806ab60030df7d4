//! Test functions, parameter selection, comparison ODEs, blow-up indicators
//! and the weak-formulation residual.

mod functional;
mod residual;
mod riccati;
mod selection;
mod testfn;

use alloc::string::String;
use thiserror::Error;

use crate::params::ParamError;
use crate::quadrature::QuadError;
use crate::signal::SignalError;

pub use functional::{
    blowup_indicator, y_functional, y_value, BetaIndicator, BlowupReport, IndicatorSample, LowerBoundCheck,
    RiccatiDomination, YFunctional,
};
pub use residual::{constant_state, field_library, weak_residual, ResidualTerms, TensorBump};
pub use riccati::{gronwall_compare, rk4, GronwallVerdict, PiecewiseLinear, Riccati};
pub use selection::{select_blowup_params, Selection, SelectionInputs};
pub use testfn::{
    log_grid, verify_integral_bound, verify_ode_inequality, IntegralBound, MarginReport, TestFnConstants,
    TestFunction, MARGIN_SLACK,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("signal: {0}")]
    Signal(#[from] SignalError),
    #[error("quadrature: {0}")]
    Quadrature(#[from] QuadError),
    #[error("delta = {delta} gives c2 = {c2:e} <= 0; delta must exceed {lower_bound}")]
    NonPositiveC2 { delta: f64, c2: f64, lower_bound: f64 },
    #[error("{quantity} out of range: {value}")]
    Domain { quantity: &'static str, value: f64 },
    #[error("t = {t} is not in [{start}, {start} + T) with T = {blow_up_time}")]
    BeyondBlowUp { t: f64, start: f64, blow_up_time: f64 },
    #[error("parameter selection failed at gamma = {gamma}: {inequality}")]
    Selection { inequality: &'static str, gamma: f64 },
    #[error("trajectory ends at {end}, before the requested time {requested}")]
    Horizon { requested: f64, end: f64 },
    #[error("test field: {0}")]
    Field(String),
}
