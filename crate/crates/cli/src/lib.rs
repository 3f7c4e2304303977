//! Batch driver for one-body, many-body, effective-medium, convergence and
//! scaling scenarios described by TOML configuration files.

pub mod config;
pub mod error;
pub mod report;
pub mod scaling;
pub mod scenarios;
pub mod table;

pub use config::{ScenarioConfig, ScenarioKind};
pub use error::{CliError, Result};
pub use report::{Headline, RunReport};
pub use scaling::{scaling_study, ScalingFit};
pub use scenarios::{run, run_with_threads};
pub use table::Table;
