//! Batch driver for beam damage localization: scenario files in, CSV
//! tables and SVG plots out.

pub mod commands;
pub mod error;
pub mod plot;
pub mod scenario;
pub mod tables;

pub use error::CliError;
pub use scenario::{ScenarioFile, Strategy};
