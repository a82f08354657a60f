//! Built-in test systems, scenario files, the experiment catalog, CSV and
//! report output, and the `cohsim` command line.

pub mod catalog;
pub mod output;
pub mod report;
pub mod scenario_io;

pub use scenario_io::{load_scenario, load_with_overrides};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] cohsim_core::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;
