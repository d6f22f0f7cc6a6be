//! Experiment pipelines, config handling and the acceptance driver behind
//! the `plateau` binary.

pub mod acceptance;
pub mod config;
pub mod fixtures;
pub mod runs;
pub mod table;

pub use config::{ConfigError, ExperimentConfig, Kind};
pub use runs::run;
pub use table::{ResultTable, RunOutput};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Pipeline {
        context: String,
        source: plateau_core::PlateauError,
    },
    #[error("writing results: {0}")]
    Io(#[from] std::io::Error),
}
