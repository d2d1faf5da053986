use std::io;
use std::path::PathBuf;

use comc_core::ModelError;
use comc_sim::SimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("scenario {scenario}: {source}")]
    Infeasible {
        scenario: String,
        #[source]
        source: Box<ModelError>,
    },

    #[error("simulation fault in {scenario}/{mode}/{seed} (run directory {}): {source}", dir.display())]
    Simulation {
        scenario: String,
        mode: String,
        seed: u64,
        dir: PathBuf,
        #[source]
        source: Box<SimError>,
    },

    #[error("output validation: {0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Config(_) => 3,
            CliError::Infeasible { .. } => 4,
            CliError::Simulation { .. } => 5,
            CliError::Validation(_) => 6,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
