//! Experiment harness for `rigidity-core`: JSON configs, named experiments,
//! run directories with a manifest that replays to identical bytes.
//!
//! A run directory holds `config.json`, `results.csv`, `profile.json` and
//! `manifest.json`. Trials use seeds derived from the config seed by index,
//! so results do not depend on thread count or scheduling.

pub mod config;
pub mod error;
pub mod experiments;
pub mod manifest;

pub use config::{Experiment, ExperimentConfig};
pub use error::{LabError, LabResult};
pub use experiments::{run_experiment, RunArtifacts};
pub use manifest::{rerun, run_to_dir, RunManifest};

/// Environment variable naming the default parent of run directories.
pub const OUTPUT_ROOT_ENV: &str = "RIGIDITY_LAB_OUTPUT_ROOT";
