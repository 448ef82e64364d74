//! Gaussian perturbations `g_z` over a window and the max-noise-over-gap
//! diagnostics.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt::factor::{
    cholesky_in_place, cholesky_in_place_scratch, LltRegularization,
};
use faer::{Mat, Par};
use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::lattice::{LatticeSpec, ShellTable, SiteList, Window};
use crate::rng::{NormalStream, STREAM_SITES};
use crate::{Error, Result};

/// Largest window for which a dense covariance factor is built.
pub const CORRELATED_SITE_CAP: usize = 20_000;

/// Diagonal jitter tried, relative to the largest variance, before a
/// covariance is declared not positive semidefinite.
pub const JITTER_LADDER: [f64; 6] = [0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// `sigma^2 exp(-|z - w| / rho)`
    Exponential,
    /// `sigma^2 exp(-|z - w|^2 / rho^2)`
    SquaredExponential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// `g = 0`; the unperturbed lattice.
    Zero,
    Iid {
        variance: f64,
    },
    /// One variable shared by every site.
    Shared {
        variance: f64,
    },
    Kernel {
        kernel: Kernel,
        variance: f64,
        length_scale: f64,
    },
    /// Covariance over the window's sites, in site order.
    Explicit {
        matrix: Vec<Vec<f64>>,
    },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidNoise(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        match self {
            NoiseModel::Zero => Ok(()),
            NoiseModel::Iid { variance } | NoiseModel::Shared { variance } => {
                positive("variance", *variance)
            }
            NoiseModel::Kernel {
                variance,
                length_scale,
                ..
            } => {
                positive("variance", *variance)?;
                positive("length_scale", *length_scale)
            }
            NoiseModel::Explicit { matrix } => {
                let n = matrix.len();
                if n == 0 || matrix.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidCovariance(
                        "matrix must be square and non-empty".into(),
                    ));
                }
                let scale = (0..n).map(|i| matrix[i][i].abs()).fold(0.0, f64::max);
                for i in 0..n {
                    if !(matrix[i][i] > 0.0) {
                        return Err(Error::InvalidCovariance(format!(
                            "diagonal entry {i} is not positive"
                        )));
                    }
                    for j in 0..i {
                        if !matrix[i][j].is_finite()
                            || (matrix[i][j] - matrix[j][i]).abs() > 1e-12 * scale
                        {
                            return Err(Error::InvalidCovariance(format!(
                                "entries ({i},{j}) and ({j},{i}) differ"
                            )));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// Largest marginal variance (0 for the zero model).
    pub fn variance(&self) -> f64 {
        match self {
            NoiseModel::Zero => 0.0,
            NoiseModel::Iid { variance }
            | NoiseModel::Shared { variance }
            | NoiseModel::Kernel { variance, .. } => *variance,
            NoiseModel::Explicit { matrix } => {
                (0..matrix.len()).map(|i| matrix[i][i]).fold(0.0, f64::max)
            }
        }
    }

    pub fn sigma(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn is_correlated(&self) -> bool {
        matches!(
            self,
            NoiseModel::Kernel { .. } | NoiseModel::Explicit { .. }
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSample {
    pub seed: u64,
    pub values: Vec<f64>,
}

enum Prepared {
    Zero,
    Iid(f64),
    Shared(f64),
    /// Lower-triangular Cholesky factor (upper triangle is stale).
    Factor(Mat<f64>),
}

/// A noise model bound to a site list, with any covariance factor computed
/// once. Sampling is a pure function of the seed.
pub struct NoiseSampler {
    len: usize,
    prepared: Prepared,
    /// Jitter (relative to the largest variance) the factorisation needed.
    pub jitter: f64,
}

impl NoiseSampler {
    pub fn new(model: &NoiseModel, sites: &SiteList) -> Result<Self> {
        Self::with_cap(model, sites, CORRELATED_SITE_CAP)
    }

    pub fn with_cap(model: &NoiseModel, sites: &SiteList, cap: usize) -> Result<Self> {
        model.validate()?;
        let n = sites.len();
        let prepared = match model {
            NoiseModel::Zero => Prepared::Zero,
            NoiseModel::Iid { variance } => Prepared::Iid(variance.sqrt()),
            NoiseModel::Shared { variance } => Prepared::Shared(variance.sqrt()),
            NoiseModel::Kernel { .. } | NoiseModel::Explicit { .. } => {
                if n > cap {
                    return Err(Error::ResourceCap {
                        what: "sites for correlated sampling",
                        needed: n as u64,
                        cap: cap as u64,
                    });
                }
                let cov = covariance_matrix(model, sites)?;
                let (factor, jitter) = factorize(cov, model.variance())?;
                return Ok(Self {
                    len: n,
                    prepared: Prepared::Factor(factor),
                    jitter,
                });
            }
        };
        Ok(Self {
            len: n,
            prepared,
            jitter: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn sample(&self, seed: u64) -> NoiseSample {
        let mut stream = NormalStream::new(seed, STREAM_SITES);
        let values = match &self.prepared {
            Prepared::Zero => vec![0.0; self.len],
            Prepared::Shared(s) => vec![s * stream.normal_at(0); self.len],
            Prepared::Iid(s) => {
                let mut v = vec![0.0; self.len];
                stream.fill(0, &mut v);
                v.iter_mut().for_each(|x| *x *= s);
                v
            }
            Prepared::Factor(l) => {
                let mut z = vec![0.0; self.len];
                stream.fill(0, &mut z);
                lower_matvec(l, &z)
            }
        };
        NoiseSample { seed, values }
    }
}

/// One-shot convenience wrapper around [`NoiseSampler`].
pub fn sample(model: &NoiseModel, sites: &SiteList, seed: u64) -> Result<NoiseSample> {
    Ok(NoiseSampler::new(model, sites)?.sample(seed))
}

fn covariance_matrix(model: &NoiseModel, sites: &SiteList) -> Result<Mat<f64>> {
    let n = sites.len();
    match model {
        NoiseModel::Kernel {
            kernel,
            variance,
            length_scale,
        } => Ok(Mat::from_fn(n, n, |i, j| {
            let d2 = sites.dist2(i, j);
            match kernel {
                Kernel::Exponential => variance * (-d2.sqrt() / length_scale).exp(),
                Kernel::SquaredExponential => {
                    variance * (-d2 / (length_scale * length_scale)).exp()
                }
            }
        })),
        NoiseModel::Explicit { matrix } => {
            if matrix.len() != n {
                return Err(Error::InvalidCovariance(format!(
                    "matrix is {}x{} but the window has {n} sites",
                    matrix.len(),
                    matrix.len()
                )));
            }
            Ok(Mat::from_fn(n, n, |i, j| matrix[i][j]))
        }
        _ => unreachable!("only correlated models build a covariance"),
    }
}

fn factorize(cov: Mat<f64>, variance: f64) -> Result<(Mat<f64>, f64)> {
    let n = cov.nrows();
    let mut mem = MemBuffer::new(cholesky_in_place_scratch::<f64>(
        n,
        Par::Seq,
        Default::default(),
    ));
    let no_reg = LltRegularization {
        dynamic_regularization_delta: 0.0,
        dynamic_regularization_epsilon: 0.0,
    };
    for &rel in &JITTER_LADDER {
        let mut m = cov.clone();
        for i in 0..n {
            m[(i, i)] += rel * variance;
        }
        let stack = MemStack::new(&mut mem);
        if cholesky_in_place(m.as_mut(), no_reg, Par::Seq, stack, Default::default()).is_ok() {
            return Ok((m, rel));
        }
    }
    Err(Error::InvalidCovariance(format!(
        "not positive semidefinite even with diagonal jitter {:e} x variance",
        JITTER_LADDER[JITTER_LADDER.len() - 1]
    )))
}

fn lower_matvec(l: &Mat<f64>, z: &[f64]) -> Vec<f64> {
    let n = z.len();
    let mut x = vec![0.0; n];
    for (j, &zj) in z.iter().enumerate() {
        let col = &l.col_as_slice(j)[j..];
        for (xi, &lij) in x[j..].iter_mut().zip(col) {
            *xi += lij * zj;
        }
    }
    x
}

/// `rho_n = max{|g_z| : 0 <= V(z) <= r_n} / (r_n - r_{n-1})` for
/// `n = 1..=N`, using the nonnegative-valued sites of the window.
pub fn check_assumption_i(noise: &[f64], sites: &SiteList, table: &ShellTable) -> Vec<f64> {
    ratios(noise, sites, table, |s| (s >= 0).then_some(s as usize))
}

/// Negative-side counterpart: `max{|g_z| : t_n <= V(z) <= 0} / |t_n - t_{n-1}|`.
pub fn check_assumption_negative(noise: &[f64], sites: &SiteList, table: &ShellTable) -> Vec<f64> {
    ratios(noise, sites, table, |s| {
        (s <= 0).then_some(s.unsigned_abs() as usize)
    })
}

fn ratios(
    noise: &[f64],
    sites: &SiteList,
    table: &ShellTable,
    shell: impl Fn(i64) -> Option<usize>,
) -> Vec<f64> {
    let n_max = table.max_shell();
    let mut per_shell = vec![0.0f64; n_max + 1];
    for (i, &g) in noise.iter().enumerate() {
        if let Some(s) = shell(sites.shells[i]) {
            if s <= n_max {
                per_shell[s] = per_shell[s].max(g.abs());
            }
        }
    }
    let mut running = per_shell[0];
    (1..=n_max)
        .map(|n| {
            running = running.max(per_shell[n]);
            running / table.gap(n)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxNoisePoint {
    pub shell: usize,
    pub mean: f64,
    pub stderr: f64,
    pub reps: usize,
}

/// Monte Carlo estimate of `E max{|g_z| : V(z) <= r_N}` for each requested
/// `N`, one window sample per seed.
pub fn max_noise_curve(
    model: &NoiseModel,
    spec: &LatticeSpec,
    shells: &[usize],
    seeds: &[u64],
    exec: Execution,
) -> Result<Vec<MaxNoisePoint>> {
    let top = *shells
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidArgument("no shells requested".into()))?;
    if seeds.len() < 2 {
        return Err(Error::InvalidArgument(
            "max_noise_curve needs at least two seeds".into(),
        ));
    }
    let window = Window::new(*spec, top)?;
    let sampler = NoiseSampler::new(model, &window.sites)?;
    let per_seed: Vec<Vec<f64>> = exec.map(seeds.len(), |r| {
        let g = sampler.sample(seeds[r]).values;
        let mut per_shell = vec![0.0f64; top + 1];
        for (i, &x) in g.iter().enumerate() {
            let s = window.sites.shells[i].unsigned_abs() as usize;
            per_shell[s] = per_shell[s].max(x.abs());
        }
        for n in 1..=top {
            per_shell[n] = per_shell[n].max(per_shell[n - 1]);
        }
        shells.iter().map(|&n| per_shell[n]).collect()
    });
    Ok(shells
        .iter()
        .enumerate()
        .map(|(k, &shell)| {
            let xs: Vec<f64> = per_seed.iter().map(|v| v[k]).collect();
            MaxNoisePoint {
                shell,
                mean: crate::stats::mean(&xs),
                stderr: (crate::stats::sample_variance(&xs) / xs.len() as f64).sqrt(),
                reps: xs.len(),
            }
        })
        .collect())
}
