//! Config-driven runs of the `halfline` pipeline with CSV/JSON artifacts.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;

pub use config::{PotentialSpec, RunConfig, Task};
pub use error::{Result, ScatterError};
pub use pipeline::run_pipeline;
pub use report::{Check, RunReport, Status, TaskReport};
