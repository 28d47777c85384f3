//! Experiment driver for the `jsdm` simulation library: scenario
//! configuration, seeded slot simulation, figure drivers and CSV output.

pub mod config;
pub mod error;
pub mod figures;
pub mod reduction;
pub mod scenario;
pub mod validate;

pub use config::{RateModel, ScenarioConfig};
pub use error::{HarnessError, Result};
pub use scenario::{ResultRow, CSV_HEADER};
