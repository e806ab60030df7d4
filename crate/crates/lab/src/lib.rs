//! File formats, configuration and subcommands of the `kslab` command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::RunConfig;
pub use error::{ExitCode, LabError};
