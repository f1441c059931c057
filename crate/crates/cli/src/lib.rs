//! Scenario files, experiment dispatch, result manifests and plot tables for
//! the `brwlab` command-line tool.

pub mod error;
pub mod manifest;
pub mod output;
pub mod plot;
pub mod run;
pub mod scenario;

pub use error::{CliError, Result};
pub use manifest::ResultManifest;
pub use plot::{emit_plot_data, View};
pub use run::run_experiment;
pub use scenario::{load_scenario, Experiment, Scenario};
