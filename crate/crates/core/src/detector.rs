//! Deletion-count detector: a finite-window version of
//!
//! ```text
//! f_k(A) = inf_{|B| = k} inf_{psi : G \ B -> A} limsup_n
//!          max_{z not in B, V(z) <= r_n} |psi(z) - V(z)| / (r_n - r_{n-1})
//! ```
//!
//! evaluated at `n = N' = N - edge_margin`. Values are passed through the
//! clamp `T(x) = min(x, r_{N'})`, so sites and points beyond the inner shell
//! are indistinguishable and cost nothing against each other. A skipped
//! site counts towards `k` when its clamped value is below the largest
//! clamped value that is matched. Because `T` is monotone, the optimal
//! matching can be taken order-preserving, which is what the dynamic
//! program searches; [`brute_force_fk`] searches every injective assignment
//! instead.
//!
//! On a two-sided window one bijection serves both sides: the lowest `m`
//! points go to the sites with `V < 0` (mirrored, with their own gaps and
//! clamp), the rest to `V >= 0`, and
//! `h_k = min_{m, j} max(f_j(positive), f_{k-j}(negative))`.

use serde::{Deserialize, Serialize};

use crate::lattice::{ShellTable, Window};
use crate::process::{GroundTruth, PointConfiguration, Side};
use crate::{Error, Result};

/// Largest site count accepted by [`brute_force_fk`].
pub const ORACLE_MAX_SITES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub k_max: usize,
    pub tau: f64,
    pub edge_margin: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            k_max: 5,
            tau: 0.5,
            edge_margin: 2,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::InvalidDetector(format!(
                "tau must lie in (0, 1), got {}",
                self.tau
            )));
        }
        if self.edge_margin < 1 {
            return Err(Error::InvalidDetector(
                "edge_margin must be at least 1".into(),
            ));
        }
        if self.k_max > 250 {
            return Err(Error::InvalidDetector(format!(
                "k_max {} is above 250",
                self.k_max
            )));
        }
        Ok(())
    }
}

/// A one-sided matching problem: sorted site values, sorted points, the
/// upper clamp and the normaliser.
#[derive(Clone, Copy, Debug)]
pub struct Instance<'a> {
    pub sites: &'a [f64],
    pub points: &'a [f64],
    pub upper: f64,
    pub normalizer: f64,
}

impl Instance<'_> {
    pub fn clamp(&self, x: f64) -> f64 {
        x.min(self.upper)
    }

    pub fn cost(&self, point: f64, site: f64) -> f64 {
        (self.clamp(point) - self.clamp(site)).abs() / self.normalizer
    }

    fn validate(&self) -> Result<()> {
        let sorted = |v: &[f64]| v.windows(2).all(|w| w[0] <= w[1]);
        if !sorted(self.sites) || !sorted(self.points) {
            return Err(Error::InvalidArgument(
                "sites and points must be sorted".into(),
            ));
        }
        if !(self.normalizer > 0.0) {
            return Err(Error::InvalidDetector(format!(
                "normalizer must be positive, got {}",
                self.normalizer
            )));
        }
        Ok(())
    }
}

struct Dp {
    ts: Vec<f64>,
    tp: Vec<f64>,
    run_start: Vec<bool>,
    normalizer: f64,
    width: usize,
}

impl Dp {
    fn new(inst: &Instance<'_>, k_max: usize) -> Self {
        let ts: Vec<f64> = inst.sites.iter().map(|&v| inst.clamp(v)).collect();
        let tp = inst.points.iter().map(|&p| inst.clamp(p)).collect();
        let run_start = (0..ts.len())
            .map(|i| i == 0 || ts[i] != ts[i - 1])
            .collect();
        Self {
            ts,
            tp,
            run_start,
            normalizer: inst.normalizer,
            width: k_max + 1,
        }
    }

    /// Point `j` sits at site `j + s`, where `s` counts the skipped sites
    /// before it. Matched sites fill each clamped-value run from its start,
    /// so a skip block always ends at a run boundary.
    fn run(&self, mut parents: Option<&mut [u8]>) -> Vec<f64> {
        let (l, w) = (self.ts.len(), self.width);
        if self.tp.is_empty() {
            let mut row = vec![f64::INFINITY; w];
            row[0] = 0.0;
            return row;
        }
        let mut prev = vec![f64::INFINITY; w];
        let mut cur = vec![f64::INFINITY; w];
        for j in 0..self.tp.len() {
            for s in 0..w {
                let i = j + s;
                if i >= l {
                    cur[s] = f64::INFINITY;
                    continue;
                }
                let mut par = s;
                let best = if j == 0 {
                    if s == 0 || self.run_start[i] {
                        f64::NEG_INFINITY
                    } else {
                        f64::INFINITY
                    }
                } else {
                    let mut best = prev[s];
                    if self.run_start[i] {
                        for (s2, &v) in prev.iter().enumerate().take(s) {
                            if v < best {
                                best = v;
                                par = s2;
                            }
                        }
                    }
                    best
                };
                cur[s] = if best == f64::INFINITY {
                    f64::INFINITY
                } else {
                    best.max((self.tp[j] - self.ts[i]).abs() / self.normalizer)
                };
                if let Some(p) = parents.as_deref_mut() {
                    p[j * w + s] = par as u8;
                }
            }
            std::mem::swap(&mut prev, &mut cur);
        }
        prev
    }

    fn assignment(&self, parents: &[u8], k: usize) -> Vec<usize> {
        let p = self.tp.len();
        let mut sites = vec![0; p];
        let mut s = k;
        for j in (0..p).rev() {
            sites[j] = j + s;
            s = parents[j * self.width + s] as usize;
        }
        sites
    }
}

/// `D_0..=D_{k_max}`, infinite where no admissible matching exists.
pub fn profile_values(inst: Instance<'_>, k_max: usize) -> Result<Vec<f64>> {
    inst.validate()?;
    if inst.points.len() > inst.sites.len() {
        return Ok(vec![f64::INFINITY; k_max + 1]);
    }
    Ok(Dp::new(&inst, k_max).run(None))
}

/// `D_k` and the instance site matched to each point.
pub type Solution = Option<(f64, Vec<usize>)>;

/// `D_k` for `k = 0..=k_max` (`None` where no admissible matching exists),
/// with the optimal assignment of points to instance sites.
pub fn solve_instance(inst: Instance<'_>, k_max: usize) -> Result<Vec<Solution>> {
    inst.validate()?;
    let (l, p) = (inst.sites.len(), inst.points.len());
    if p > l {
        return Err(Error::WindowTooSmall {
            points: p,
            skips: 0,
            sites: l,
        });
    }
    let dp = Dp::new(&inst, k_max);
    let mut parents = vec![0u8; p * dp.width];
    let best = dp.run(Some(&mut parents));
    Ok((0..dp.width)
        .map(|k| (best[k] < f64::INFINITY).then(|| (best[k], dp.assignment(&parents, k))))
        .collect())
}

/// Exhaustive search over every injective assignment of points to sites
/// whose counted skips number exactly `k`. Test oracle for the DP.
pub fn brute_force_fk(inst: Instance<'_>, k: usize) -> Result<Option<f64>> {
    fn rec(
        inst: &Instance<'_>,
        t: &[f64],
        k: usize,
        j: usize,
        used: &mut [bool],
        running: f64,
        best: &mut Option<f64>,
    ) {
        if j == inst.points.len() {
            let t_max = (0..t.len())
                .filter(|&i| used[i])
                .map(|i| t[i])
                .fold(f64::NEG_INFINITY, f64::max);
            let counted = (0..t.len()).filter(|&i| !used[i] && t[i] < t_max).count();
            if counted == k && best.is_none_or(|b| running < b) {
                *best = Some(running);
            }
            return;
        }
        for i in 0..inst.sites.len() {
            if !used[i] {
                used[i] = true;
                let c = running.max(inst.cost(inst.points[j], inst.sites[i]));
                rec(inst, t, k, j + 1, used, c, best);
                used[i] = false;
            }
        }
    }
    inst.validate()?;
    if inst.sites.len() > ORACLE_MAX_SITES {
        return Err(Error::OracleTooLarge {
            sites: inst.sites.len(),
            max: ORACLE_MAX_SITES,
        });
    }
    if inst.points.len() > inst.sites.len() {
        return Err(Error::WindowTooSmall {
            points: inst.points.len(),
            skips: k,
            sites: inst.sites.len(),
        });
    }
    let t: Vec<f64> = inst.sites.iter().map(|&v| inst.clamp(v)).collect();
    let mut best = None;
    rec(
        &inst,
        &t,
        k,
        0,
        &mut vec![false; inst.sites.len()],
        0.0,
        &mut best,
    );
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub bottleneck: f64,
    /// Window site id matched to each observed point, in point order.
    pub assignment: Vec<usize>,
    /// Skipped sites that count towards `k`.
    pub skipped_interior: Vec<usize>,
    /// Skipped sites in the clamped run at the top of their side.
    pub skipped_free: usize,
    /// Point attaining the bottleneck.
    pub argmax: Option<usize>,
    /// Points given to the sites with `V < 0` (two-sided windows only).
    pub negative_points: usize,
    /// `max |psi(z) - V(z)|` over matched sites in shells `0..=n`, divided by
    /// `r_n - r_{n-1}` (the larger of the two sides on a two-sided window),
    /// for `n = 1..=N'`.
    pub per_shell_stat: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessSummary {
    pub bottleneck: f64,
    pub skipped_interior: Vec<usize>,
    pub skipped_free: usize,
    pub argmax: Option<usize>,
    pub negative_points: usize,
}

impl From<&MatchResult> for WitnessSummary {
    fn from(m: &MatchResult) -> Self {
        Self {
            bottleneck: m.bottleneck,
            skipped_interior: m.skipped_interior.clone(),
            skipped_free: m.skipped_free,
            argmax: m.argmax,
            negative_points: m.negative_points,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorProfile {
    /// `D_0..=D_{k_max}`; `None` where the window admits no matching.
    pub d: Vec<Option<f64>>,
    pub k_hat: Option<usize>,
    pub tau: f64,
    pub witnesses: Vec<Option<WitnessSummary>>,
}

impl DetectorProfile {
    /// Running minimum `min_{j <= k} D_j`.
    pub fn envelope(&self) -> Vec<Option<f64>> {
        let mut acc: Option<f64> = None;
        self.d
            .iter()
            .map(|x| {
                acc = match (acc, *x) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                };
                acc
            })
            .collect()
    }
}

/// The sites of one side, mirrored to ascending order for `V < 0`.
struct SideData<'w> {
    negative: bool,
    site_ids: Vec<usize>,
    sites: Vec<f64>,
    table: &'w ShellTable,
    upper: f64,
    normalizer: f64,
    inner: usize,
}

impl<'w> SideData<'w> {
    fn new(window: &'w Window, inner: usize, negative: bool) -> Result<Self> {
        let shells = &window.sites.shells;
        let values = &window.sites.values;
        let (site_ids, sites, table): (Vec<usize>, Vec<f64>, &ShellTable) = if negative {
            let table = window.negative.as_ref().ok_or_else(|| {
                Error::InvalidDetector("the negative side needs a two-sided window".into())
            })?;
            let ids: Vec<usize> = (0..values.len()).rev().filter(|&i| shells[i] < 0).collect();
            let v = ids.iter().map(|&i| -values[i]).collect();
            (ids, v, table)
        } else {
            let ids: Vec<usize> = (0..values.len()).filter(|&i| shells[i] >= 0).collect();
            let v = ids.iter().map(|&i| values[i]).collect();
            (ids, v, &window.positive)
        };
        Ok(Self {
            negative,
            site_ids,
            sites,
            table,
            upper: table.values[inner],
            normalizer: table.gap(inner),
            inner,
        })
    }

    fn instance<'a>(&'a self, points: &'a [f64]) -> Instance<'a> {
        Instance {
            sites: &self.sites,
            points,
            upper: self.upper,
            normalizer: self.normalizer,
        }
    }

    /// Instance points for the observed points `range`, with the observed
    /// index of each.
    fn points(&self, obs: &[f64], range: std::ops::Range<usize>) -> (Vec<f64>, Vec<usize>) {
        if self.negative {
            range.rev().map(|j| (-obs[j], j)).unzip()
        } else {
            range.map(|j| (obs[j], j)).unzip()
        }
    }
}

/// One side's part of a matching, in instance coordinates.
struct SidePart<'a, 'w> {
    side: &'a SideData<'w>,
    points: Vec<f64>,
    obs_index: Vec<usize>,
    sites: Vec<usize>,
}

fn assemble(
    window: &Window,
    bottleneck: f64,
    parts: &[SidePart<'_, '_>],
    negative_points: usize,
) -> MatchResult {
    let mut assignment = vec![0; parts.iter().map(|p| p.points.len()).sum()];
    let mut argmax = None;
    let mut worst = f64::NEG_INFINITY;
    let mut skipped_interior = Vec::new();
    let mut skipped_free = 0;
    let inner = parts[0].side.inner;
    let mut per_shell = vec![0.0f64; inner];
    for part in parts {
        let side = part.side;
        let inst = side.instance(&part.points);
        let mut matched = vec![false; side.sites.len()];
        let mut raw = vec![0.0f64; inner + 1];
        for (j, &i) in part.sites.iter().enumerate() {
            matched[i] = true;
            let site = side.site_ids[i];
            assignment[part.obs_index[j]] = site;
            let c = inst.cost(part.points[j], side.sites[i]);
            if c > worst {
                worst = c;
                argmax = Some(part.obs_index[j]);
            }
            let shell = window.sites.shells[site].unsigned_abs() as usize;
            if shell <= inner {
                raw[shell] = raw[shell].max((part.points[j] - side.sites[i]).abs());
            }
        }
        let t_max = part
            .sites
            .iter()
            .map(|&i| inst.clamp(side.sites[i]))
            .fold(f64::NEG_INFINITY, f64::max);
        for i in 0..side.sites.len() {
            if !matched[i] {
                if inst.clamp(side.sites[i]) < t_max {
                    skipped_interior.push(side.site_ids[i]);
                } else {
                    skipped_free += 1;
                }
            }
        }
        let mut running = raw[0];
        for n in 1..=inner {
            running = running.max(raw[n]);
            per_shell[n - 1] = per_shell[n - 1].max(running / side.table.gap(n));
        }
    }
    skipped_interior.sort_unstable();
    MatchResult {
        bottleneck,
        assignment,
        skipped_interior,
        skipped_free,
        argmax,
        negative_points,
        per_shell_stat: per_shell,
    }
}

fn sides<'w>(
    window: &'w Window,
    config: &DetectorConfig,
    obs: &PointConfiguration,
) -> Result<Vec<SideData<'w>>> {
    config.validate()?;
    let inner = window.inner_shell(config.edge_margin)?;
    match (obs.side, window.spec.is_two_sided()) {
        (Side::Positive, false) => Ok(vec![SideData::new(window, inner, false)?]),
        (Side::TwoSided, true) => Ok(vec![
            SideData::new(window, inner, false)?,
            SideData::new(window, inner, true)?,
        ]),
        (side, two) => Err(Error::InvalidDetector(format!(
            "a {side:?} configuration cannot be read on a {} window",
            if two { "two-sided" } else { "one-sided" }
        ))),
    }
}

/// Optimal `(value, match)` for every `k`.
fn solve(
    window: &Window,
    config: &DetectorConfig,
    obs: &PointConfiguration,
) -> Result<Vec<Option<(f64, MatchResult)>>> {
    if obs.points.len() > window.sites.len() {
        return Err(Error::WindowTooSmall {
            points: obs.points.len(),
            skips: 0,
            sites: window.sites.len(),
        });
    }
    let sides = sides(window, config, obs)?;
    let k_max = config.k_max;
    let total = obs.points.len();
    if sides.len() == 1 {
        let side = &sides[0];
        let (points, obs_index) = side.points(&obs.points, 0..total);
        let solved = solve_instance(side.instance(&points), k_max)?;
        return Ok(solved
            .into_iter()
            .map(|entry| {
                entry.map(|(v, sites)| {
                    let part = SidePart {
                        side,
                        points: points.clone(),
                        obs_index: obs_index.clone(),
                        sites,
                    };
                    (v, assemble(window, v, &[part], 0))
                })
            })
            .collect());
    }

    let (pos, neg) = (&sides[0], &sides[1]);
    // best[k] = (value, m, j)
    let mut best: Vec<Option<(f64, usize, usize)>> = vec![None; k_max + 1];
    for m in 0..=total {
        if m > neg.sites.len() || total - m > pos.sites.len() {
            continue;
        }
        let (pp, _) = pos.points(&obs.points, m..total);
        let (np, _) = neg.points(&obs.points, 0..m);
        let fp = profile_values(pos.instance(&pp), k_max)?;
        let fn_ = profile_values(neg.instance(&np), k_max)?;
        for k in 0..=k_max {
            for j in 0..=k {
                let v = fp[j].max(fn_[k - j]);
                if v < f64::INFINITY && best[k].is_none_or(|b| v < b.0) {
                    best[k] = Some((v, m, j));
                }
            }
        }
    }
    let mut out = Vec::with_capacity(k_max + 1);
    for (k, entry) in best.into_iter().enumerate() {
        let Some((v, m, j)) = entry else {
            out.push(None);
            continue;
        };
        let mut parts = Vec::with_capacity(2);
        for (side, range, skips) in [(pos, m..total, j), (neg, 0..m, k - j)] {
            let (points, obs_index) = side.points(&obs.points, range);
            let (_, sites) = solve_instance(side.instance(&points), skips)?[skips]
                .clone()
                .expect("feasible in the value pass");
            parts.push(SidePart {
                side,
                points,
                obs_index,
                sites,
            });
        }
        out.push(Some((v, assemble(window, v, &parts, m))));
    }
    Ok(out)
}

/// `D_k` with its optimal matching. Errors when `k > k_max` or when no
/// matching with exactly `k` counted skips fits in the window.
pub fn truncated_fk(
    window: &Window,
    config: &DetectorConfig,
    obs: &PointConfiguration,
    k: usize,
) -> Result<(f64, MatchResult)> {
    if k > config.k_max {
        return Err(Error::KExceedsMax {
            k,
            k_max: config.k_max,
        });
    }
    solve(window, config, obs)?
        .swap_remove(k)
        .ok_or(Error::WindowTooSmall {
            points: obs.points.len(),
            skips: k,
            sites: window.sites.len(),
        })
}

/// `D_0..=D_{k_max}` and `k_hat = min{k : D_k <= tau}`.
pub fn detector_profile(
    window: &Window,
    config: &DetectorConfig,
    obs: &PointConfiguration,
) -> Result<DetectorProfile> {
    let solved = solve(window, config, obs)?;
    let d: Vec<Option<f64>> = solved.iter().map(|e| e.as_ref().map(|x| x.0)).collect();
    let k_hat = d.iter().position(|x| x.is_some_and(|v| v <= config.tau));
    Ok(DetectorProfile {
        k_hat,
        tau: config.tau,
        witnesses: solved
            .iter()
            .map(|e| e.as_ref().map(|x| WitnessSummary::from(&x.1)))
            .collect(),
        d,
    })
}

/// `h_k` on a two-sided window.
pub fn two_sided_profile(
    window: &Window,
    config: &DetectorConfig,
    obs: &PointConfiguration,
) -> Result<DetectorProfile> {
    if obs.side != Side::TwoSided {
        return Err(Error::InvalidDetector(
            "two_sided_profile needs a two-sided configuration".into(),
        ));
    }
    detector_profile(window, config, obs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainEnd {
    /// Reached a guessed-deleted site, which has no image.
    Skipped,
    /// Reached a site without an image inside the window, or a point
    /// generated outside it.
    ExitsWindow,
    /// Revisited a site; impossible for a bijection, reported defensively.
    Revisits,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MismatchChain {
    /// `u_0, u_1, ...` as site ids.
    pub sites: Vec<usize>,
    pub end: ChainEnd,
    /// Indices `n_0 < n_1 < ...` into `sites` with
    /// `0 <= V(u_{n_k}) < V(u_{n_k + 1})` and `V(u_{n_k + 1})` increasing.
    pub monotone: Vec<usize>,
}

/// Follows `psi(u_n) = V(u_{n+1}) + g_{u_{n+1}}` from each `u_0` in `T \ B`
/// (ascending, skipping sites already visited), restarting whenever a chain
/// ends in `B`.
///
/// `psi[site]` is the point matched to a site, `generators[point]` the site
/// that produced a point (`None` if it lies outside the window).
pub fn trace_mismatch_chains(
    values: &[f64],
    psi: &[Option<usize>],
    generators: &[Option<usize>],
    skipped: &[usize],
    deleted: &[usize],
) -> Vec<MismatchChain> {
    let mut in_b = vec![false; values.len()];
    for &b in skipped {
        in_b[b] = true;
    }
    let mut visited = vec![false; values.len()];
    let mut starts: Vec<usize> = deleted.iter().copied().filter(|&t| !in_b[t]).collect();
    starts.sort_unstable();
    let mut chains = Vec::new();
    for u0 in starts {
        if visited[u0] {
            continue;
        }
        visited[u0] = true;
        let mut sites = vec![u0];
        let end = loop {
            let u = *sites.last().unwrap();
            if sites.len() > 1 && in_b[u] {
                break ChainEnd::Skipped;
            }
            let Some(next) = psi[u].and_then(|pt| generators[pt]) else {
                break ChainEnd::ExitsWindow;
            };
            if visited[next] {
                break ChainEnd::Revisits;
            }
            visited[next] = true;
            sites.push(next);
        };
        let monotone = monotone_subsequence(values, &sites);
        chains.push(MismatchChain {
            sites,
            end,
            monotone,
        });
    }
    chains
}

fn monotone_subsequence(values: &[f64], chain: &[usize]) -> Vec<usize> {
    let mut picked = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for n in 0..chain.len().saturating_sub(1) {
        let (a, b) = (values[chain[n]], values[chain[n + 1]]);
        if 0.0 <= a && a < b && b > last {
            picked.push(n);
            last = b;
        }
    }
    picked
}

/// Chains for a detector witness against the simulation's ground truth.
pub fn chains_for_match(
    window: &Window,
    m: &MatchResult,
    truth: &GroundTruth,
) -> Vec<MismatchChain> {
    let mut psi = vec![None; window.sites.len()];
    for (point, &site) in m.assignment.iter().enumerate() {
        psi[site] = Some(point);
    }
    let generators: Vec<Option<usize>> = truth.generators().iter().map(|&s| Some(s)).collect();
    trace_mismatch_chains(
        &window.sites.values,
        &psi,
        &generators,
        &m.skipped_interior,
        truth.deleted(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst<'a>(sites: &'a [f64], points: &'a [f64], upper: f64) -> Instance<'a> {
        Instance {
            sites,
            points,
            upper,
            normalizer: 1.0,
        }
    }

    #[test]
    fn identity_costs_nothing() {
        let s = [0.0, 1.0, 1.0, 4.0, 4.0, 9.0];
        let r = solve_instance(inst(&s, &s, 9.0), 2).unwrap();
        assert_eq!(r[0].as_ref().unwrap().0, 0.0);
        assert_eq!(r[0].as_ref().unwrap().1, vec![0, 1, 2, 3, 4, 5]);
        // no room for an interior skip once every site is matched
        assert!(r[1].is_none());
    }

    #[test]
    fn one_missing_point_needs_one_skip() {
        let s = [0.0, 1.0, 1.0, 4.0, 4.0, 9.0, 9.0];
        let p = [0.0, 1.0, 4.0, 4.0, 9.0, 9.0];
        let i = Instance {
            normalizer: 5.0,
            ..inst(&s, &p, 9.0)
        };
        let r = solve_instance(i, 2).unwrap();
        // without a counted skip the shift runs up to the top: 9 -> 4
        assert_eq!(r[0].as_ref().unwrap().0, 1.0);
        assert_eq!(r[1].as_ref().unwrap().0, 0.0);
        assert_eq!(r[1].as_ref().unwrap().1, vec![0, 1, 3, 4, 5, 6]);
        for k in 0..=2 {
            assert_eq!(brute_force_fk(i, k).unwrap(), r[k].as_ref().map(|x| x.0));
        }
    }

    #[test]
    fn clamped_sites_are_free() {
        let s = [0.0, 1.0, 2.0, 3.0, 4.0];
        let p = [0.0, 1.0, 4.5];
        let r = solve_instance(inst(&s, &p, 2.0), 1).unwrap();
        assert_eq!(r[0].as_ref().unwrap().0, 0.0);
        assert_eq!(profile_values(inst(&s, &p, 2.0), 1).unwrap()[0], 0.0);
    }

    #[test]
    fn empty_and_oversized_instances() {
        let s = [0.0, 1.0];
        let r = solve_instance(inst(&s, &[], 1.0), 1).unwrap();
        assert_eq!(r[0].as_ref().unwrap().0, 0.0);
        assert!(r[1].is_none());
        let p = [0.0, 1.0, 2.0];
        assert!(solve_instance(inst(&s, &p, 1.0), 1).is_err());
        assert!(profile_values(inst(&s, &p, 1.0), 1)
            .unwrap()
            .iter()
            .all(|v| v.is_infinite()));
    }

    #[test]
    fn oracle_rejects_large_instances() {
        let s: Vec<f64> = (0..11).map(f64::from).collect();
        assert!(matches!(
            brute_force_fk(inst(&s, &s[..3], 10.0), 0),
            Err(Error::OracleTooLarge { .. })
        ));
    }

    #[test]
    fn figure_configuration() {
        // sites z0..z5; T = {z2, z4} deleted from the process; B = {z1}.
        // psi sends z0, z2, z3, z4 to the points of z0, z3, z1, z5, and z5 to a
        // point generated outside the window.
        let values = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let generators = [Some(0), Some(1), Some(3), Some(5), None];
        let psi = [Some(0), None, Some(2), Some(1), Some(3), Some(4)];
        let chains = trace_mismatch_chains(&values, &psi, &generators, &[1], &[2, 4]);
        assert_eq!(chains.len(), 2);
        assert_eq!(chains[0].sites, vec![2, 3, 1]);
        assert_eq!(chains[0].end, ChainEnd::Skipped);
        assert_eq!(chains[1].sites, vec![4, 5]);
        assert_eq!(chains[1].end, ChainEnd::ExitsWindow);
        assert_eq!(chains[1].monotone, vec![0]);
    }

    #[test]
    fn matching_guess_gives_no_chains() {
        let values = [0.0, 1.0, 2.0];
        let generators = [Some(0), Some(2)];
        let psi = [Some(0), None, Some(1)];
        assert!(trace_mismatch_chains(&values, &psi, &generators, &[1], &[1]).is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(DetectorConfig::default().validate().is_ok());
        for bad in [
            DetectorConfig {
                tau: 1.0,
                ..Default::default()
            },
            DetectorConfig {
                tau: 0.0,
                ..Default::default()
            },
            DetectorConfig {
                edge_margin: 0,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
