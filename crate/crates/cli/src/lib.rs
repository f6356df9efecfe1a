//! Library surface of the experiment harness: configuration schema,
//! orchestration, and report types. The `disent` binary is a thin argument
//! parser over these modules.

pub mod config;
pub mod error;
pub mod harness;
pub mod report;

pub use config::{ExperimentConfig, FlatConfig};
pub use error::{CliError, CliResult};
