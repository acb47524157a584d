//! Command-line pipeline for `bellctx`: simulate both arms of a Bell-type
//! experiment from a TOML config, match coincidences, tabulate, and decide
//! whether a noncontextual joint distribution exists.

pub mod config;
pub mod error;
pub mod pipeline;

pub use config::PipelineConfig;
pub use error::{exit, CliError, Result};
pub use pipeline::{analyze, run, AnalyzeRequest, RunOutcome};
