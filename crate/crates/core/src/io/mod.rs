//! Configuration files, CSV tables, SVG figures and the command runner.

pub mod config;
pub mod run;
pub mod svg;
pub mod table;

pub use config::{load_config, RunConfig};
pub use run::{run_command, Manifest, ResultBundle, Verb};
pub use table::Table;
