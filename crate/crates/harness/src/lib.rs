//! Scenario files, bundled worlds and run outputs for the polyscout simulator.
//!
//! A scenario names a world file, a seed, a step budget and a set of dotted
//! config overrides. [`run_scenario`] executes it and [`write_outputs`] emits
//! the trace, the metrics row and the final map as SVG and JSON.

pub mod oracle;
pub mod output;
pub mod scenario;
pub mod sweep;
pub mod world_file;
pub mod worlds;

use std::path::PathBuf;

use polyscout_core::clip::ClipError;
use polyscout_core::explore::ExploreError;
use polyscout_core::sensor::WorldError;
use thiserror::Error;

pub use output::{run_scenario, write_outputs, MetricsRow, RunOutput};
pub use scenario::Scenario;
pub use world_file::WorldFile;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("unsupported schema version {0}, expected {SCHEMA_VERSION}")]
    Schema(u32),
    #[error("{ring}: {reason}")]
    Ring { ring: String, reason: String },
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("override `{key}`: {reason}")]
    Override { key: String, reason: String },
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error(transparent)]
    Clip(#[from] ClipError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// Whether the failure lies in user-supplied input rather than in execution.
    pub fn is_input_error(&self) -> bool {
        match self {
            HarnessError::Io { source, .. } => source.kind() == std::io::ErrorKind::NotFound,
            HarnessError::Json { .. }
            | HarnessError::Schema(_)
            | HarnessError::Ring { .. }
            | HarnessError::World(_)
            | HarnessError::Override { .. } => true,
            HarnessError::Explore(ExploreError::Config(_) | ExploreError::Sensor(_) | ExploreError::Loc(_)) => true,
            HarnessError::Explore(ExploreError::Mapper(_)) | HarnessError::Clip(_) | HarnessError::Csv(_) => false,
        }
    }
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|source| HarnessError::Json { path: path.to_path_buf(), source })
}
