//! Scenario files, trajectory and report export, and the `flownet` command
//! line on top of [`flownet_core`].

pub mod cli;
pub mod error;
pub mod output;
pub mod scenario;

pub use error::CliError;
pub use scenario::{Format, Scenario, ScenarioError};
