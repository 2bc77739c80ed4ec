//! Scenario files, end-to-end runs and parameter sweeps for `toa-core`.

pub mod error;
pub mod output;
pub mod pipeline;
pub mod scenario;
pub mod sweep;

pub use error::CliError;
pub use pipeline::{run_model, run_scenario, RunArtifacts, Summary};
pub use scenario::{Model, Scenario, ValidationError};
pub use sweep::{run_sweep, SweepSpec, SweepTable};
