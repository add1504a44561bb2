//! Command-line front end of `nlos-bounds`: TOML scenario files, the
//! `decompose`, `bounds`, `sweep` and `compare` commands, and their CSV,
//! JSON and SVG artifacts.

pub mod artifacts;
pub mod commands;
mod error;
pub mod report;
pub mod scenario_file;

pub use error::{CliError, Location, Result};
pub use scenario_file::ScenarioFile;
