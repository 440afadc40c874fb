//! Scenario files, law sweeps and experiment runners for `polyagent`.
//!
//! A scenario is a JSON document (`"version": "polyagent/1"`) declaring
//! named sets, polynomials, lenses, channels, systems, agents and
//! experiments. [`build::Built`] resolves it into core values; the
//! functions in [`commands`] implement the command-line verbs and return
//! [`report::RunReport`]s.

pub mod build;
pub mod commands;
pub mod error;
pub mod expr;
pub mod report;
pub mod scenario;

pub use build::{Built, Guards};
pub use error::{CliError, CliResult};
pub use report::RunReport;
pub use scenario::Scenario;
