//! Square-summable mean shifts.
//!
//! Sites are enumerated `z_0, z_1, ...` by nondecreasing value of `V`, and
//! a finite deleted set `S` gives the counting function
//! `s(i) = |S ∩ {z_0, ..., z_i}|`. Deleting `S` shifts the mean of
//! coordinate `i` by `V(z_{i+s(i)}) - V(z_i)`; for i.i.d. Gaussian noise the
//! two laws are equivalent exactly when these shifts are square-summable.
//! Within a shell, deleted sites take the first positions.

use serde::{Deserialize, Serialize};

use crate::lattice::{
    enumerate_shells, float_power_sums, integer_power_sums, Domain, LatticeSpec, Norm, ShellTable,
};
use crate::stats::{log_bins, ols, CompensatedSum};
use crate::{Error, Result};

/// Half-width of the band around `-1` inside which no verdict is given.
pub const EXPONENT_BAND: f64 = 0.05;
pub const TAIL_BINS: usize = 24;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShiftScenario {
    /// Delete the sites `sites` from `spec`.
    SingleDeletion {
        spec: LatticeSpec,
        sites: Vec<Vec<i64>>,
    },
    /// Compare deleting `s` with deleting `t`, `|s| = |t|`.
    PairedDeletion {
        spec: LatticeSpec,
        s: Vec<Vec<i64>>,
        t: Vec<Vec<i64>>,
    },
    /// `V(z) = z^alpha` for `z >= 0`, `V(z) = -|z|^beta` for `z < 0`.
    /// Deleting nonnegative sites shifts only the positive coordinates.
    DoubleSided {
        alpha: f64,
        beta: f64,
        deleted: Vec<i64>,
    },
    /// Terms `((i+1)^alpha - i^alpha)^2`.
    UnitShift { alpha: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converges,
    Diverges,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub index: u64,
    pub partial_sum: f64,
    pub last_term: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SheppReport {
    pub checkpoints: Vec<Checkpoint>,
    /// Fitted slope of `log term_i` against `log i` over the last decade;
    /// `None` when every term there is zero.
    pub tail_exponent: Option<f64>,
    pub tail_stderr: Option<f64>,
    /// Index after which every term is zero, if that happens within range.
    pub last_nonzero: Option<u64>,
    pub verdict: Verdict,
}

/// Sorted values `V(z_0) <= V(z_1) <= ...` of one-sided lattices, expanded
/// lazily from a shell table.
struct Values {
    table: ShellTable,
}

impl Values {
    fn new(spec: &LatticeSpec, count: u64) -> Result<Self> {
        if spec.is_two_sided() {
            return Err(Error::InvalidSpec(
                "use the double-sided scenario for two-sided domains".into(),
            ));
        }
        let mut shells = 16usize;
        loop {
            let table = enumerate_shells(spec, shells)?;
            if *table.cumulative.last().unwrap() >= count {
                return Ok(Self { table });
            }
            shells *= 2;
        }
    }

    fn shell_of(&self, i: u64) -> usize {
        self.table.cumulative.partition_point(|&c| c <= i)
    }

    fn at(&self, i: u64) -> f64 {
        self.table.values[self.shell_of(i)]
    }

    /// Enumeration indices of `sites`, which take the first slots of their
    /// shells in the given order.
    fn indices(&self, spec: &LatticeSpec, sites: &[Vec<i64>]) -> Result<Vec<u64>> {
        let mut used: Vec<(usize, u64)> = Vec::new();
        let mut out = Vec::with_capacity(sites.len());
        for z in sites {
            let v = site_value(spec, z)?;
            let shell = self
                .table
                .values
                .iter()
                .position(|&r| (r - v).abs() <= 1e-9 * r.max(1.0))
                .ok_or_else(|| {
                    Error::InvalidArgument(format!("site {z:?} lies beyond the enumerated shells"))
                })?;
            let start = if shell == 0 {
                0
            } else {
                self.table.cumulative[shell - 1]
            };
            let slot = used.iter().filter(|(s, _)| *s == shell).count() as u64;
            if slot >= self.table.multiplicities[shell] {
                return Err(Error::InvalidArgument(format!(
                    "too many sites in shell {shell}"
                )));
            }
            used.push((shell, slot));
            out.push(start + slot);
        }
        let mut sorted = out.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(
                "deleted set lists a site twice".into(),
            ));
        }
        Ok(sorted)
    }
}

fn site_value(spec: &LatticeSpec, z: &[i64]) -> Result<f64> {
    if z.len() != spec.dimension {
        return Err(Error::InvalidArgument(format!(
            "site {z:?} has the wrong dimension"
        )));
    }
    let norm = match spec.norm {
        Norm::L1 => z.iter().map(|x| x.unsigned_abs() as f64).sum(),
        Norm::Linf => z.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0) as f64,
        Norm::Lp { p } => z
            .iter()
            .map(|x| (x.unsigned_abs() as f64).powf(p))
            .sum::<f64>()
            .powf(1.0 / p),
    };
    match spec.domain {
        Domain::Naturals => {
            if z[0] < 1 {
                return Err(Error::InvalidArgument(format!(
                    "site {z:?} is not a positive integer"
                )));
            }
            Ok(norm.powf(spec.alpha))
        }
        _ => Ok(norm.powf(spec.alpha)),
    }
}

/// Deletion counting function evaluated incrementally.
struct Counter {
    deleted: Vec<u64>,
    next: usize,
}

impl Counter {
    fn new(deleted: Vec<u64>) -> Self {
        Self { deleted, next: 0 }
    }

    /// `s(i)`; must be called with nondecreasing `i`.
    fn at(&mut self, i: u64) -> u64 {
        while self.next < self.deleted.len() && self.deleted[self.next] <= i {
            self.next += 1;
        }
        self.next as u64
    }
}

fn checkpoints(i_max: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut c = 1000u64;
    while c < i_max {
        out.push(c);
        c *= 10;
    }
    out.push(i_max);
    out
}

/// Partial sums `sum_{i < I} term_i` at `I = 10^3, 10^4, ..., i_max` and a
/// verdict from the tail exponent over `[i_max / 10, i_max)`.
pub fn shepp_sum(scenario: &ShiftScenario, i_max: u64) -> Result<SheppReport> {
    if i_max < 100 {
        return Err(Error::InvalidArgument("i_max must be at least 100".into()));
    }
    let terms = terms(scenario, i_max)?;
    Ok(report(&terms))
}

/// `term_0, ..., term_{i_max - 1}` for a scenario.
pub fn terms(scenario: &ShiftScenario, i_max: u64) -> Result<Vec<f64>> {
    match scenario {
        ShiftScenario::UnitShift { alpha } => {
            check_alpha(*alpha)?;
            Ok((0..i_max).map(|i| unit_term(*alpha, i)).collect())
        }
        ShiftScenario::DoubleSided {
            alpha,
            beta,
            deleted,
        } => {
            check_alpha(*alpha)?;
            check_alpha(*beta)?;
            let mut d: Vec<u64> = deleted
                .iter()
                .map(|&z| {
                    u64::try_from(z).map_err(|_| {
                        Error::InvalidArgument("only nonnegative sites may be deleted".into())
                    })
                })
                .collect::<Result<_>>()?;
            d.sort_unstable();
            if d.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidArgument(
                    "deleted set lists a site twice".into(),
                ));
            }
            // the negative coordinates are untouched; positive coordinate i
            // is z = i with value i^alpha
            let mut s = Counter::new(d);
            let v = |i: u64| (i as f64).powf(*alpha);
            Ok((0..i_max)
                .map(|i| {
                    let j = i + s.at(i);
                    (v(j) - v(i)).powi(2)
                })
                .collect())
        }
        ShiftScenario::SingleDeletion { spec, sites } => {
            spec.validate()?;
            let values = Values::new(spec, i_max + sites.len() as u64 + 1)?;
            let mut s = Counter::new(values.indices(spec, sites)?);
            Ok((0..i_max)
                .map(|i| {
                    let j = i + s.at(i);
                    (values.at(j) - values.at(i)).powi(2)
                })
                .collect())
        }
        ShiftScenario::PairedDeletion { spec, s, t } => {
            spec.validate()?;
            if s.len() != t.len() {
                return Err(Error::InvalidArgument(format!(
                    "|S| = {} differs from |T| = {}",
                    s.len(),
                    t.len()
                )));
            }
            let values = Values::new(spec, i_max + s.len() as u64 + 1)?;
            let mut cs = Counter::new(values.indices(spec, s)?);
            let mut ct = Counter::new(values.indices(spec, t)?);
            Ok((0..i_max)
                .map(|i| {
                    let a = values.at(i + cs.at(i));
                    let b = values.at(i + ct.at(i));
                    (a - b).powi(2)
                })
                .collect())
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!(
            "exponent must be positive, got {alpha}"
        )))
    }
}

fn unit_term(alpha: f64, i: u64) -> f64 {
    let x = i as f64;
    // (i+1)^a - i^a = i^a expm1(a ln1p(1/i)) keeps precision for large i
    let d = if i == 0 {
        1.0
    } else {
        x.powf(alpha) * (alpha * (1.0 / x).ln_1p()).exp_m1()
    };
    d * d
}

fn report(terms: &[f64]) -> SheppReport {
    let i_max = terms.len() as u64;
    let marks = checkpoints(i_max);
    let mut out = Vec::with_capacity(marks.len());
    let mut acc = CompensatedSum::default();
    let mut next = 0;
    for (i, &t) in terms.iter().enumerate() {
        acc.add(t);
        if (i as u64) + 1 == marks[next] {
            out.push(Checkpoint {
                index: marks[next],
                partial_sum: acc.value(),
                last_term: t,
            });
            next += 1;
        }
    }
    let last_nonzero = terms.iter().rposition(|&t| t != 0.0).map(|p| p as u64);
    let lo = (i_max / 10).max(1) as usize;
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for (a, b) in log_bins(lo, terms.len() - 1, TAIL_BINS) {
        let mean = terms[a..b].iter().sum::<f64>() / (b - a) as f64;
        if mean > 0.0 {
            lx.push(((a as f64) * (b as f64 - 1.0).max(a as f64)).sqrt().ln());
            ly.push(mean.ln());
        }
    }
    let fit = if lx.len() >= 3 { ols(&lx, &ly) } else { None };
    let tail_is_zero = last_nonzero.is_none_or(|p| (p as usize) < lo);
    let verdict = match fit {
        _ if tail_is_zero => Verdict::Converges,
        Some(f) => {
            let half = 1.96 * f.slope_stderr;
            if f.slope < -1.0 - EXPONENT_BAND && f.slope + half < -1.0 {
                Verdict::Converges
            } else if f.slope > -1.0 + EXPONENT_BAND && f.slope - half > -1.0 {
                Verdict::Diverges
            } else {
                Verdict::Inconclusive
            }
        }
        None => Verdict::Inconclusive,
    };
    SheppReport {
        checkpoints: out,
        tail_exponent: if tail_is_zero {
            None
        } else {
            fit.map(|f| f.slope)
        },
        tail_stderr: if tail_is_zero {
            None
        } else {
            fit.map(|f| f.slope_stderr)
        },
        last_nonzero,
        verdict,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EllpVerdict {
    TendsToZero,
    DoesNotTendToZero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllpReport {
    /// `sqrt(log n) / (s_n^{alpha/p} - s_{n-1}^{alpha/p})` for `n = 1..=max_n`
    /// (`None` at gap-zero events).
    pub ratios: Vec<Option<f64>>,
    /// Indices `n` where consecutive values collided within tolerance.
    pub gap_zero: Vec<usize>,
    /// Slope of log bin maxima against log n over the last decade.
    pub trend_slope: f64,
    pub verdict: EllpVerdict,
}

/// Ratio sequence for an `Lp` lattice with the `s_n` table of sums of `d`
/// `p`-th powers.
pub fn ellp_condition(spec: &LatticeSpec, max_n: usize) -> Result<EllpReport> {
    spec.validate()?;
    let Norm::Lp { p } = spec.norm else {
        return Err(Error::InvalidSpec(
            "the lp condition needs an Lp norm".into(),
        ));
    };
    if max_n < 20 {
        return Err(Error::InvalidArgument("max_n must be at least 20".into()));
    }
    let e = spec.alpha / p;
    let values: Vec<f64> = if p.fract() == 0.0 && p <= 32.0 {
        integer_power_sums(spec.dimension, p as u32, max_n + 1)?
            .0
            .into_iter()
            .map(|s| (s as f64).powf(e))
            .collect()
    } else {
        float_power_sums(spec.dimension, p, max_n + 1)?
            .0
            .into_iter()
            .map(|s| s.powf(e))
            .collect()
    };
    let mut ratios = Vec::with_capacity(max_n);
    let mut gap_zero = Vec::new();
    for n in 1..=max_n {
        let gap = values[n] - values[n - 1];
        if gap <= 1e-12 * values[n].abs().max(1.0) {
            gap_zero.push(n);
            ratios.push(None);
        } else {
            ratios.push(Some((n as f64).ln().sqrt() / gap));
        }
    }
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for (a, b) in log_bins((max_n / 10).max(2), max_n, TAIL_BINS) {
        let m = ratios[a - 1..b - 1]
            .iter()
            .flatten()
            .fold(0.0f64, |x, &y| x.max(y));
        if m > 0.0 {
            lx.push(((a * (b - 1).max(a)) as f64).sqrt().ln());
            ly.push(m.ln());
        }
    }
    let trend_slope = ols(&lx, &ly).map_or(f64::NAN, |f| f.slope);
    let verdict = if trend_slope < -EXPONENT_BAND {
        EllpVerdict::TendsToZero
    } else {
        EllpVerdict::DoesNotTendToZero
    };
    Ok(EllpReport {
        ratios,
        gap_zero,
        trend_slope,
        verdict,
    })
}
