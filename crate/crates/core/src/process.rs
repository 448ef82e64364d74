//! Simulation of `{V(z) + g_z : z in window, z not in S}` with the ground
//! truth kept behind an access-counting interface.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::lattice::Window;
use crate::noise::{NoiseModel, NoiseSampler};
use crate::rng::{stream_rng, STREAM_DELETION};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Positive,
    Negative,
    TwoSided,
}

/// The detector's only input: sorted observed values and the cut that
/// produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointConfiguration {
    pub points: Vec<f64>,
    pub window_cut: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_cut: Option<f64>,
    pub side: Side,
}

impl PointConfiguration {
    pub fn new(
        mut points: Vec<f64>,
        window_cut: f64,
        lower_cut: Option<f64>,
        side: Side,
    ) -> Result<Self> {
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("points must be finite".into()));
        }
        points.sort_by(f64::total_cmp);
        Ok(Self {
            points,
            window_cut,
            lower_cut,
            side,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Deletion {
    None,
    /// Explicit coordinates.
    Sites {
        sites: Vec<Vec<i64>>,
    },
    /// `count` distinct sites drawn uniformly among those with
    /// `|shell| <= max_shell`.
    Random {
        count: usize,
        max_shell: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CutRule {
    /// Keep points `<= r_{N - edge_margin} + sigmas * sigma` (and the mirror
    /// image below for a two-sided window).
    EdgeMargin {
        edge_margin: usize,
        sigmas: f64,
    },
    Fixed {
        upper: f64,
        lower: Option<f64>,
    },
}

impl CutRule {
    pub fn default_for(edge_margin: usize) -> Self {
        CutRule::EdgeMargin {
            edge_margin,
            sigmas: 3.0,
        }
    }

    pub fn bounds(&self, window: &Window, sigma: f64) -> Result<(f64, Option<f64>)> {
        match *self {
            CutRule::Fixed { upper, lower } => Ok((upper, lower)),
            CutRule::EdgeMargin {
                edge_margin,
                sigmas,
            } => {
                let n = window.inner_shell(edge_margin)?;
                let upper = window.positive.values[n] + sigmas * sigma;
                let lower = window
                    .negative
                    .as_ref()
                    .map(|t| -(t.values[n] + sigmas * sigma));
                Ok((upper, lower))
            }
        }
    }
}

/// What the simulation knows and the detector must not see. Every accessor
/// bumps a counter so tests can check that a code path never looked.
#[derive(Debug)]
pub struct GroundTruth {
    deleted: Vec<usize>,
    generators: Vec<usize>,
    noise: Vec<f64>,
    exited: usize,
    accesses: AtomicUsize,
}

impl GroundTruth {
    fn touch(&self) {
        self.accesses.fetch_add(1, Ordering::Relaxed);
    }

    /// Site ids of the deleted set `S`, ascending.
    pub fn deleted(&self) -> &[usize] {
        self.touch();
        &self.deleted
    }

    /// Site that generated each observed point, in point order.
    pub fn generators(&self) -> &[usize] {
        self.touch();
        &self.generators
    }

    pub fn noise(&self) -> &[f64] {
        self.touch();
        &self.noise
    }

    /// Non-deleted window sites whose point fell outside the cut.
    pub fn exited(&self) -> usize {
        self.touch();
        self.exited
    }

    pub fn access_count(&self) -> usize {
        self.accesses.load(Ordering::Relaxed)
    }
}

/// Window, noise model and prepared sampler; simulates one configuration
/// per seed.
pub struct Process {
    pub window: Window,
    pub model: NoiseModel,
    sampler: NoiseSampler,
}

impl Process {
    pub fn new(window: Window, model: NoiseModel) -> Result<Self> {
        let sampler = NoiseSampler::new(&model, &window.sites)?;
        Ok(Self {
            window,
            model,
            sampler,
        })
    }

    pub fn sampler(&self) -> &NoiseSampler {
        &self.sampler
    }

    pub fn deletion_sites(&self, deletion: &Deletion, seed: u64) -> Result<Vec<usize>> {
        let mut ids = match deletion {
            Deletion::None => Vec::new(),
            Deletion::Sites { sites } => self.window.site_ids(sites)?,
            Deletion::Random { count, max_shell } => {
                let candidates: Vec<usize> = (0..self.window.sites.len())
                    .filter(|&i| self.window.sites.shells[i].unsigned_abs() as usize <= *max_shell)
                    .collect();
                if *count > candidates.len() {
                    return Err(Error::InvalidArgument(format!(
                        "cannot delete {count} sites from {} candidates",
                        candidates.len()
                    )));
                }
                let mut rng = stream_rng(seed, STREAM_DELETION);
                index::sample(&mut rng, candidates.len(), *count)
                    .into_iter()
                    .map(|k| candidates[k])
                    .collect()
            }
        };
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(
                "deletion set lists a site twice".into(),
            ));
        }
        Ok(ids)
    }

    pub fn simulate(
        &self,
        deletion: &Deletion,
        cut: &CutRule,
        seed: u64,
    ) -> Result<(PointConfiguration, GroundTruth)> {
        let deleted = self.deletion_sites(deletion, seed)?;
        let (upper, lower) = cut.bounds(&self.window, self.model.sigma())?;
        let noise = self.sampler.sample(seed).values;
        let values = &self.window.sites.values;
        let mut is_deleted = vec![false; values.len()];
        for &i in &deleted {
            is_deleted[i] = true;
        }
        let mut kept: Vec<(f64, usize)> = Vec::with_capacity(values.len());
        let mut exited = 0;
        for i in 0..values.len() {
            if is_deleted[i] {
                continue;
            }
            let x = values[i] + noise[i];
            if x <= upper && lower.is_none_or(|l| x >= l) {
                kept.push((x, i));
            } else {
                exited += 1;
            }
        }
        kept.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let (points, generators): (Vec<f64>, Vec<usize>) = kept.into_iter().unzip();
        let side = if self.window.spec.is_two_sided() {
            Side::TwoSided
        } else {
            Side::Positive
        };
        Ok((
            PointConfiguration {
                points,
                window_cut: upper,
                lower_cut: lower,
                side,
            },
            GroundTruth {
                deleted,
                generators,
                noise,
                exited,
                accesses: AtomicUsize::new(0),
            },
        ))
    }
}

/// One-shot wrapper: builds the sampler and simulates a single seed.
pub fn simulate_process(
    window: &Window,
    model: &NoiseModel,
    deletion: &Deletion,
    cut: &CutRule,
    seed: u64,
) -> Result<(PointConfiguration, GroundTruth)> {
    Process::new(window.clone(), model.clone())?.simulate(deletion, cut, seed)
}
