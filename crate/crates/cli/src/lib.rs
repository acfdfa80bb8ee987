//! Batch driver for the HSIE solvers: JSON configs in, summary, CSV and
//! field files out.

pub mod config;
pub mod output;
pub mod run;

pub use config::{ConfigError, RunConfig, Task};
pub use run::{run, Outcome, Row, RunError};
