//! Run directories: writing results, the manifest, and replaying a manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use rigidity_core::exec::Execution;

use crate::config::ExperimentConfig;
use crate::error::{LabError, LabResult};
use crate::experiments::run_experiment;

pub const CONFIG_FILE: &str = "config.json";
pub const RESULTS_FILE: &str = "results.csv";
pub const PROFILE_FILE: &str = "profile.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to reproduce a run. Only `started_unix` and
/// `wall_clock_seconds` vary between identical runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub trial_seeds: Vec<u64>,
    pub parallel: bool,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub summary: Value,
    /// SHA-256 hex digest of each result file, keyed by file name.
    pub digests: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest.iter() {
        write!(out, "{b:02x}").expect("writing to a String");
    }
    out
}

/// The config as stored in a run directory: output location removed so
/// that the snapshot does not depend on where the run was written.
pub fn snapshot(config: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig {
        output: None,
        ..config.clone()
    }
}

/// Runs `config` and writes `config.json`, `results.csv`, `profile.json`
/// and `manifest.json` into `dir`.
pub fn run_to_dir(
    config: &ExperimentConfig,
    dir: &Path,
    exec: Execution,
) -> LabResult<RunManifest> {
    let config = snapshot(config);
    config.validate()?;
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let clock = Instant::now();
    let artifacts = run_experiment(&config, exec)?;
    let wall_clock_seconds = clock.elapsed().as_secs_f64();

    std::fs::create_dir_all(dir)?;
    let files: [(&str, Vec<u8>); 3] = [
        (CONFIG_FILE, config.to_json()?.into_bytes()),
        (RESULTS_FILE, artifacts.results_csv),
        (PROFILE_FILE, artifacts.profile_json),
    ];
    let mut digests = BTreeMap::new();
    for (name, bytes) in &files {
        std::fs::write(dir.join(name), bytes)?;
        digests.insert(name.to_string(), sha256_hex(bytes));
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config,
        trial_seeds: artifacts.trial_seeds,
        parallel: exec.is_parallel(),
        started_unix,
        wall_clock_seconds,
        summary: artifacts.summary,
        digests,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(dir.join(MANIFEST_FILE), text)?;
    Ok(manifest)
}

pub fn load_manifest(path: &Path) -> LabResult<RunManifest> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RerunReport {
    pub out: PathBuf,
    /// Files whose digest differs from the original manifest.
    pub mismatched: Vec<String>,
}

impl RerunReport {
    pub fn reproduced(&self) -> bool {
        self.mismatched.is_empty()
    }
}

/// Replays the config stored in a manifest into `out` and compares digests.
pub fn rerun(manifest_path: &Path, out: &Path, exec: Execution) -> LabResult<RerunReport> {
    let original = load_manifest(manifest_path)?;
    if original.version != env!("CARGO_PKG_VERSION") {
        return Err(LabError::Config(format!(
            "manifest was written by version {}, this is {}",
            original.version,
            env!("CARGO_PKG_VERSION")
        )));
    }
    let replay = run_to_dir(&original.config, out, exec)?;
    let mismatched = original
        .digests
        .iter()
        .filter(|(name, digest)| replay.digests.get(*name) != Some(digest))
        .map(|(name, _)| name.clone())
        .collect();
    Ok(RerunReport {
        out: out.to_path_buf(),
        mismatched,
    })
}
