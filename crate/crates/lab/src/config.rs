//! Experiment configuration: one JSON document per run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rigidity_core::detector::DetectorConfig;
use rigidity_core::lattice::{enumerate_shells, Domain, LatticeSpec, Norm, DEFAULT_SITE_CAP};
use rigidity_core::noise::{NoiseModel, CORRELATED_SITE_CAP};
use rigidity_core::process::{CutRule, Deletion};
use rigidity_core::shepp::ShiftScenario;

use crate::error::{LabError, LabResult};

/// JSON schema for [`ExperimentConfig`].
pub const CONFIG_SCHEMA: &str = include_str!("../config.schema.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    DetectorTrial,
    ThresholdSweep,
    VarianceCurve,
    SheppReport,
    AssumptionCheck,
    EllpReport,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::DetectorTrial => "detector-trial",
            Experiment::ThresholdSweep => "threshold-sweep",
            Experiment::VarianceCurve => "variance-curve",
            Experiment::SheppReport => "shepp-report",
            Experiment::AssumptionCheck => "assumption-check",
            Experiment::EllpReport => "ellp-report",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub max_shell: usize,
    /// Defaults to `r_{N - edge_margin} + 3 sigma`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut: Option<CutRule>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParams {
    pub taus: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarianceParams {
    /// Radii `n`; the test function scale is `n^alpha`.
    pub scales: Vec<f64>,
    /// Monte Carlo repetitions per radius; 0 for analytic values only.
    #[serde(default)]
    pub reps: usize,
    /// Relative weight of the i.i.d. variance left outside the MC window.
    #[serde(default = "default_window_tol")]
    pub window_tol: f64,
}

fn default_window_tol() -> f64 {
    1e-6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SheppParams {
    pub scenario: ShiftScenario,
    pub i_max: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssumptionParams {
    pub shells: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllpParams {
    pub max_n: usize,
}

fn no_deletion() -> Deletion {
    Deletion::None
}

fn zero_noise() -> NoiseModel {
    NoiseModel::Zero
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Required by every experiment except `shepp-report`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<LatticeSpec>,
    #[serde(default = "zero_noise")]
    pub noise: NoiseModel,
    #[serde(default = "no_deletion")]
    pub deletion: Deletion,
    /// Required by `detector-trial`, `threshold-sweep` and `assumption-check`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowConfig>,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default = "one")]
    pub trials: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<VarianceParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shepp: Option<SheppParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumption: Option<AssumptionParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ellp: Option<EllpParams>,
}

fn missing(section: &str, experiment: Experiment) -> LabError {
    LabError::Config(format!("`{section}` is required for {}", experiment.name()))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> LabResult<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> LabResult<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> LabResult<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn lattice(&self) -> LabResult<LatticeSpec> {
        self.spec.ok_or_else(|| missing("spec", self.experiment))
    }

    pub fn window_config(&self) -> LabResult<&WindowConfig> {
        self.window
            .as_ref()
            .ok_or_else(|| missing("window", self.experiment))
    }

    /// Schema-level checks plus resource caps. Does not allocate the window.
    pub fn validate(&self) -> LabResult<()> {
        if self.experiment != Experiment::SheppReport {
            self.lattice()?.validate()?;
        }
        self.noise.validate()?;
        if self.trials == 0 {
            return Err(LabError::Config("trials must be at least 1".into()));
        }
        match self.experiment {
            Experiment::DetectorTrial | Experiment::ThresholdSweep => {
                self.detector.validate()?;
                let max_shell = self.window_config()?.max_shell;
                if self.detector.edge_margin >= max_shell {
                    return Err(LabError::Config(format!(
                        "edge_margin {} must be below max_shell {max_shell}",
                        self.detector.edge_margin
                    )));
                }
                self.check_window_caps(max_shell)?;
                if self.experiment == Experiment::ThresholdSweep {
                    let sweep = self
                        .sweep
                        .as_ref()
                        .ok_or_else(|| missing("sweep", self.experiment))?;
                    if sweep.taus.is_empty() || sweep.taus.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
                        return Err(LabError::Config(
                            "sweep taus must be nonempty and lie in (0, 1)".into(),
                        ));
                    }
                }
            }
            Experiment::VarianceCurve => {
                let v = self
                    .variance
                    .as_ref()
                    .ok_or_else(|| missing("variance", self.experiment))?;
                if v.scales.is_empty() || v.scales.iter().any(|s| !(*s > 0.0)) {
                    return Err(LabError::Config("variance scales must be positive".into()));
                }
                if v.reps == 1 {
                    return Err(LabError::Config(
                        "variance reps must be 0 or at least 2".into(),
                    ));
                }
                if !(v.window_tol > 0.0 && v.window_tol < 1.0) {
                    return Err(LabError::Config("window_tol must lie in (0, 1)".into()));
                }
                let spec = self.lattice()?;
                if !matches!(
                    (spec.domain, spec.norm),
                    (Domain::Full, Norm::L1 | Norm::Linf)
                ) {
                    return Err(LabError::Config(
                        "variance curves need the full lattice with L1 or Linf".into(),
                    ));
                }
            }
            Experiment::SheppReport => {
                let s = self
                    .shepp
                    .as_ref()
                    .ok_or_else(|| missing("shepp", self.experiment))?;
                if s.i_max < 100 {
                    return Err(LabError::Config("i_max must be at least 100".into()));
                }
            }
            Experiment::AssumptionCheck => {
                let a = self
                    .assumption
                    .as_ref()
                    .ok_or_else(|| missing("assumption", self.experiment))?;
                let max_shell = self.window_config()?.max_shell;
                if a.shells.is_empty() || a.shells.iter().any(|&n| n == 0 || n > max_shell) {
                    return Err(LabError::Config(
                        "assumption shells must lie in 1..=max_shell".into(),
                    ));
                }
                if self.trials < 2 {
                    return Err(LabError::Config(
                        "assumption-check needs at least 2 trials".into(),
                    ));
                }
                self.check_window_caps(max_shell)?;
            }
            Experiment::EllpReport => {
                let e = self
                    .ellp
                    .as_ref()
                    .ok_or_else(|| missing("ellp", self.experiment))?;
                if !matches!(self.lattice()?.norm, Norm::Lp { .. }) {
                    return Err(LabError::Config("ellp-report needs an Lp norm".into()));
                }
                if e.max_n < 20 {
                    return Err(LabError::Config("ellp max_n must be at least 20".into()));
                }
            }
        }
        Ok(())
    }

    fn check_window_caps(&self, max_shell: usize) -> LabResult<()> {
        let spec = self.lattice()?;
        let table = enumerate_shells(&spec, max_shell)?;
        let per_side = table.cumulative[max_shell];
        let sites = if spec.is_two_sided() {
            2 * per_side - 1
        } else {
            per_side
        };
        if sites > DEFAULT_SITE_CAP {
            return Err(rigidity_core::Error::ResourceCap {
                what: "window sites",
                needed: sites,
                cap: DEFAULT_SITE_CAP,
            }
            .into());
        }
        if self.noise.is_correlated() && sites > CORRELATED_SITE_CAP as u64 {
            return Err(rigidity_core::Error::ResourceCap {
                what: "sites for correlated sampling",
                needed: sites,
                cap: CORRELATED_SITE_CAP as u64,
            }
            .into());
        }
        Ok(())
    }

    pub fn cut(&self) -> CutRule {
        self.window
            .as_ref()
            .and_then(|w| w.cut)
            .unwrap_or(CutRule::default_for(self.detector.edge_margin))
    }
}
