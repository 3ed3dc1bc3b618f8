//! Batch front end: simulation, empty-gate calibration, reconstruction and
//! report export for the `tomo` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod files;
pub mod report;

pub use error::{CliError, Result};
