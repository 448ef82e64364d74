//! Shell tables and site lists for `V(z) = ||z||^alpha` on `Z^d`, plus the two
//! one-dimensional variants used by the counterexamples (`V(z) = z^alpha` on
//! the naturals, and a two-sided potential).

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default cap on the number of sites materialised for one window.
pub const DEFAULT_SITE_CAP: u64 = 5_000_000;

/// Relative tolerance used to merge power sums for non-integer `p`.
pub const LP_MERGE_RTOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Norm {
    L1,
    Linf,
    Lp { p: f64 },
}

/// Index set and sign pattern of `V`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    /// All of `Z^d`.
    #[default]
    Full,
    /// `z = 1, 2, 3, ...` with `V(z) = z^alpha` (requires `d = 1`).
    Naturals,
    /// `z in Z` with `V(z) = z^alpha` for `z >= 0` and
    /// `V(z) = -|z|^negative_alpha` for `z < 0` (requires `d = 1`).
    TwoSided { negative_alpha: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub dimension: usize,
    pub norm: Norm,
    pub alpha: f64,
    #[serde(default)]
    pub domain: Domain,
}

impl LatticeSpec {
    pub fn new(dimension: usize, norm: Norm, alpha: f64) -> Self {
        Self {
            dimension,
            norm,
            alpha,
            domain: Domain::Full,
        }
    }

    pub fn naturals(alpha: f64) -> Self {
        Self {
            dimension: 1,
            norm: Norm::L1,
            alpha,
            domain: Domain::Naturals,
        }
    }

    pub fn two_sided(alpha: f64, negative_alpha: f64) -> Self {
        Self {
            dimension: 1,
            norm: Norm::L1,
            alpha,
            domain: Domain::TwoSided { negative_alpha },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.dimension == 0 {
            return bad("dimension must be at least 1".into());
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return bad(format!(
                "alpha must be positive and finite, got {}",
                self.alpha
            ));
        }
        if let Norm::Lp { p } = self.norm {
            if !(p.is_finite() && p > 1.0) {
                return bad(format!("Lp norm needs p > 1, got {p}"));
            }
        }
        match self.domain {
            Domain::Full => {}
            Domain::Naturals => {
                if self.dimension != 1 {
                    return bad("the naturals domain is one-dimensional".into());
                }
            }
            Domain::TwoSided { negative_alpha } => {
                if self.dimension != 1 {
                    return bad("the two-sided domain is one-dimensional".into());
                }
                if !(negative_alpha.is_finite() && negative_alpha > 0.0) {
                    return bad(format!(
                        "negative_alpha must be positive, got {negative_alpha}"
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn is_two_sided(&self) -> bool {
        matches!(self.domain, Domain::TwoSided { .. })
    }

    /// `p` as an integer when the norm is `Lp` with integral `p`.
    fn integer_p(&self) -> Option<u32> {
        match self.norm {
            Norm::Lp { p } if p.fract() == 0.0 && p <= 32.0 => Some(p as u32),
            _ => None,
        }
    }
}

/// Raw `s_n` values backing an `Lp` table (`values[n] = s_n^(alpha/p)`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerSums {
    Exact(Vec<u64>),
    Approx(Vec<f64>),
}

/// Distinct values `r_0 < r_1 < ... < r_N` of `V` with their multiplicities.
///
/// For a two-sided domain this describes one side; the negative side stores
/// magnitudes `|t_n|`, with the origin shared as shell 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellTable {
    pub values: Vec<f64>,
    pub multiplicities: Vec<u64>,
    pub cumulative: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_sums: Option<PowerSums>,
}

impl ShellTable {
    fn from_parts(
        values: Vec<f64>,
        multiplicities: Vec<u64>,
        power_sums: Option<PowerSums>,
    ) -> Self {
        let cumulative = multiplicities
            .iter()
            .scan(0u64, |acc, &m| {
                *acc += m;
                Some(*acc)
            })
            .collect();
        Self {
            values,
            multiplicities,
            cumulative,
            power_sums,
        }
    }

    pub fn max_shell(&self) -> usize {
        self.values.len() - 1
    }

    /// `r_n - r_{n-1}`.
    pub fn gap(&self, n: usize) -> f64 {
        self.values[n] - self.values[n - 1]
    }

    /// Keeps shells `0..=n`.
    pub fn truncated(&self, n: usize) -> Self {
        let power_sums = self.power_sums.as_ref().map(|ps| match ps {
            PowerSums::Exact(v) => PowerSums::Exact(v[..=n].to_vec()),
            PowerSums::Approx(v) => PowerSums::Approx(v[..=n].to_vec()),
        });
        Self {
            values: self.values[..=n].to_vec(),
            multiplicities: self.multiplicities[..=n].to_vec(),
            cumulative: self.cumulative[..=n].to_vec(),
            power_sums,
        }
    }
}

/// Gaps `r_n - r_{n-1}` for `n = 1..=N`.
pub fn image_gaps(table: &ShellTable) -> Result<Vec<f64>> {
    if table.values.len() < 2 {
        return Err(Error::InvalidArgument(
            "image_gaps needs at least two shells".into(),
        ));
    }
    Ok(table.values.windows(2).map(|w| w[1] - w[0]).collect())
}

pub fn enumerate_shells(spec: &LatticeSpec, max_shell: usize) -> Result<ShellTable> {
    enumerate_shells_capped(spec, max_shell, DEFAULT_SITE_CAP)
}

/// First `max_shell + 1` distinct values of `V` with exact multiplicities.
///
/// Fails with a resource error when the top shell alone holds more than
/// `cap` sites. For a two-sided domain this is the positive side.
pub fn enumerate_shells_capped(
    spec: &LatticeSpec,
    max_shell: usize,
    cap: u64,
) -> Result<ShellTable> {
    spec.validate()?;
    let table = match spec.domain {
        Domain::Naturals => {
            let values = (0..=max_shell)
                .map(|n| ((n + 1) as f64).powf(spec.alpha))
                .collect();
            ShellTable::from_parts(values, vec![1; max_shell + 1], None)
        }
        Domain::TwoSided { .. } => {
            let values = (0..=max_shell)
                .map(|n| (n as f64).powf(spec.alpha))
                .collect();
            ShellTable::from_parts(values, vec![1; max_shell + 1], None)
        }
        Domain::Full => match spec.norm {
            Norm::L1 | Norm::Linf => {
                let mut mult = Vec::with_capacity(max_shell + 1);
                for m in 0..=max_shell as u64 {
                    mult.push(match spec.norm {
                        Norm::L1 => l1_shell_count(spec.dimension as u64, m)?,
                        _ => linf_shell_count(spec.dimension as u32, m)?,
                    });
                }
                let values = (0..=max_shell)
                    .map(|n| (n as f64).powf(spec.alpha))
                    .collect();
                ShellTable::from_parts(values, mult, None)
            }
            Norm::Lp { p } => {
                let (sums, mult) = match spec.integer_p() {
                    Some(ip) => {
                        let (s, m) = integer_power_sums(spec.dimension, ip, max_shell + 1)?;
                        (PowerSums::Exact(s), m)
                    }
                    None => {
                        let (s, m) = float_power_sums(spec.dimension, p, max_shell + 1)?;
                        (PowerSums::Approx(s), m)
                    }
                };
                let e = spec.alpha / p;
                let values = match &sums {
                    PowerSums::Exact(s) => s.iter().map(|&s| (s as f64).powf(e)).collect(),
                    PowerSums::Approx(s) => s.iter().map(|&s| s.powf(e)).collect(),
                };
                ShellTable::from_parts(values, mult, Some(sums))
            }
        },
    };
    let top = table.multiplicities[max_shell];
    if top > cap {
        return Err(Error::ResourceCap {
            what: "sites in the top shell",
            needed: top,
            cap,
        });
    }
    Ok(table)
}

/// Magnitudes `|t_n| = n^negative_alpha` of the negative side of a two-sided
/// domain; shell 0 is the origin.
pub fn negative_shells(spec: &LatticeSpec, max_shell: usize) -> Result<ShellTable> {
    spec.validate()?;
    match spec.domain {
        Domain::TwoSided { negative_alpha } => {
            let values = (0..=max_shell)
                .map(|n| (n as f64).powf(negative_alpha))
                .collect();
            Ok(ShellTable::from_parts(values, vec![1; max_shell + 1], None))
        }
        _ => Err(Error::InvalidSpec(
            "negative shells exist only for a two-sided domain".into(),
        )),
    }
}

fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(u128::from(n - i))? / u128::from(i + 1);
    }
    Some(acc)
}

/// `|{z in Z^d : ||z||_1 = m}| = sum_k 2^k C(d,k) C(m-1,k-1)`.
pub fn l1_shell_count(d: u64, m: u64) -> Result<u64> {
    if m == 0 {
        return Ok(1);
    }
    let overflow = || Error::ResourceCap {
        what: "L1 shell count",
        needed: u64::MAX,
        cap: u64::MAX,
    };
    let mut total: u128 = 0;
    for k in 1..=d.min(m) {
        let term = binomial(d, k)
            .and_then(|a| binomial(m - 1, k - 1).and_then(|b| a.checked_mul(b)))
            .and_then(|t| t.checked_mul(1u128 << k))
            .ok_or_else(overflow)?;
        total = total.checked_add(term).ok_or_else(overflow)?;
    }
    u64::try_from(total).map_err(|_| overflow())
}

/// `|{z in Z^d : ||z||_inf = m}| = (2m+1)^d - (2m-1)^d`.
pub fn linf_shell_count(d: u32, m: u64) -> Result<u64> {
    if m == 0 {
        return Ok(1);
    }
    let outer = u128::from(2 * m + 1).checked_pow(d);
    let inner = u128::from(2 * m - 1).checked_pow(d);
    outer
        .zip(inner)
        .and_then(|(a, b)| u64::try_from(a - b).ok())
        .ok_or(Error::ResourceCap {
            what: "Linf shell count",
            needed: u64::MAX,
            cap: u64::MAX,
        })
}

const MAX_POWER_SUM_BOUND: u64 = 1 << 40;

fn int_root(m: u64, p: u32) -> u64 {
    let mut x = (m as f64).powf(1.0 / f64::from(p)) as u64;
    while x > 0 && x.checked_pow(p).is_none_or(|v| v > m) {
        x -= 1;
    }
    while (x + 1).checked_pow(p).is_some_and(|v| v <= m) {
        x += 1;
    }
    x
}

/// Sorted `(value, count)` pairs of `sum_i |x_i|^p` over `x in Z^d` with sum
/// at most `bound`, built by sparse convolution one coordinate at a time.
fn power_sum_counts(d: usize, p: u32, bound: u64) -> Vec<(u64, u64)> {
    let top = int_root(bound, p);
    let coord: Vec<(u64, u64)> = (0..=top)
        .map(|x| (x.pow(p), if x == 0 { 1 } else { 2 }))
        .collect();
    let mut acc = vec![(0u64, 1u64)];
    for _ in 0..d {
        let mut next = Vec::with_capacity(acc.len() * 4);
        for &(s, c) in &acc {
            for &(v, w) in &coord {
                let t = s + v;
                if t > bound {
                    break;
                }
                next.push((t, c * w));
            }
        }
        next.sort_unstable_by_key(|e| e.0);
        acc.clear();
        for (v, c) in next {
            match acc.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => acc.push((v, c)),
            }
        }
    }
    acc
}

/// The first `count` distinct values `s_n` of `sum |x_i|^p` with exact
/// multiplicities.
pub fn integer_power_sums(d: usize, p: u32, count: usize) -> Result<(Vec<u64>, Vec<u64>)> {
    let mut bound = (count as u64).max(16);
    loop {
        let counts = power_sum_counts(d, p, bound);
        if counts.len() >= count {
            let (s, m) = counts.into_iter().take(count).unzip();
            return Ok((s, m));
        }
        bound = bound.saturating_mul(2);
        if bound > MAX_POWER_SUM_BOUND {
            return Err(Error::ResourceCap {
                what: "power-sum search bound",
                needed: bound,
                cap: MAX_POWER_SUM_BOUND,
            });
        }
    }
}

/// Non-integer `p`: enumerates nondecreasing tuples, weights them by their
/// signed permutations, and merges sums closer than [`LP_MERGE_RTOL`].
pub fn float_power_sums(d: usize, p: f64, count: usize) -> Result<(Vec<f64>, Vec<u64>)> {
    fn factorial(n: usize) -> u64 {
        (1..=n as u64).product()
    }
    fn rec(
        d: usize,
        p: f64,
        bound: f64,
        min_x: u64,
        partial: f64,
        tuple: &mut Vec<u64>,
        out: &mut Vec<(f64, u64)>,
    ) {
        if tuple.len() == d {
            let mut perms = factorial(d);
            let mut run = 1usize;
            for w in tuple.windows(2) {
                if w[0] == w[1] {
                    run += 1;
                } else {
                    perms /= factorial(run);
                    run = 1;
                }
            }
            perms /= factorial(run);
            let nonzero = tuple.iter().filter(|&&x| x != 0).count() as u32;
            out.push((partial, perms << nonzero));
            return;
        }
        let mut x = min_x;
        loop {
            let s = partial + (x as f64).powf(p);
            if s > bound {
                break;
            }
            tuple.push(x);
            rec(d, p, bound, x, s, tuple, out);
            tuple.pop();
            x += 1;
        }
    }

    let mut bound = (count as f64).max(16.0);
    loop {
        let mut raw = Vec::new();
        rec(d, p, bound, 0, 0.0, &mut Vec::with_capacity(d), &mut raw);
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, u64)> = Vec::new();
        let mut anchor = f64::NAN;
        for (s, m) in raw {
            match merged.last_mut() {
                Some(last) if (s - anchor).abs() <= LP_MERGE_RTOL * s.abs().max(anchor.abs()) => {
                    last.1 += m
                }
                _ => {
                    anchor = s;
                    merged.push((s, m));
                }
            }
        }
        // values within tolerance of the bound may still have partners above it
        merged.retain(|&(s, _)| s <= bound * (1.0 - 2.0 * LP_MERGE_RTOL));
        if merged.len() >= count {
            merged.truncate(count);
            return Ok(merged.into_iter().unzip());
        }
        bound *= 2.0;
        if bound > MAX_POWER_SUM_BOUND as f64 {
            return Err(Error::ResourceCap {
                what: "power-sum search bound",
                needed: bound as u64,
                cap: MAX_POWER_SUM_BOUND,
            });
        }
    }
}

/// Sites of a window, sorted by value; ties are broken by lexicographic
/// coordinate order. Site ids are positions in this list.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteList {
    pub dimension: usize,
    coords: Vec<i64>,
    /// Side-local shell index; negative-side sites of a two-sided domain
    /// carry `-n`.
    pub shells: Vec<i64>,
    pub values: Vec<f64>,
}

impl SiteList {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn coords(&self, site: usize) -> &[i64] {
        &self.coords[site * self.dimension..(site + 1) * self.dimension]
    }

    /// Squared Euclidean distance between two sites.
    pub fn dist2(&self, a: usize, b: usize) -> f64 {
        self.coords(a)
            .iter()
            .zip(self.coords(b))
            .map(|(x, y)| {
                let d = (x - y) as f64;
                d * d
            })
            .sum()
    }

    pub fn find(&self, coords: &[i64]) -> Option<usize> {
        if coords.len() != self.dimension {
            return None;
        }
        (0..self.len()).find(|&i| self.coords(i) == coords)
    }
}

pub fn enumerate_sites(spec: &LatticeSpec, max_shell: usize) -> Result<SiteList> {
    let table = enumerate_shells(spec, max_shell)?;
    sites_for_table(spec, &table, DEFAULT_SITE_CAP)
}

/// Every site with shell index at most the table's top shell (both sides
/// for a two-sided domain).
pub fn sites_for_table(spec: &LatticeSpec, table: &ShellTable, cap: u64) -> Result<SiteList> {
    let n_max = table.max_shell();
    let d = spec.dimension;
    match spec.domain {
        Domain::Naturals => {
            check_cap(table.cumulative[n_max], cap)?;
            Ok(SiteList {
                dimension: 1,
                coords: (1..=n_max as i64 + 1).collect(),
                shells: (0..=n_max as i64).collect(),
                values: table.values.clone(),
            })
        }
        Domain::TwoSided { negative_alpha } => {
            check_cap(2 * n_max as u64 + 1, cap)?;
            let n = n_max as i64;
            let coords: Vec<i64> = (-n..=n).collect();
            let values = coords
                .iter()
                .map(|&z| {
                    if z >= 0 {
                        table.values[z as usize]
                    } else {
                        -((-z) as f64).powf(negative_alpha)
                    }
                })
                .collect();
            Ok(SiteList {
                dimension: 1,
                shells: coords.clone(),
                coords,
                values,
            })
        }
        Domain::Full => {
            check_cap(table.cumulative[n_max], cap)?;
            let shell_of = ShellLookup::new(spec, table)?;
            let mut found: Vec<(u32, Vec<i64>)> =
                Vec::with_capacity(table.cumulative[n_max] as usize);
            let mut cur = Vec::with_capacity(d);
            enumerate_box(&shell_of, d, &mut cur, &mut found);
            // box enumeration is lexicographic; a stable sort keeps that within shells
            found.sort_by_key(|e| e.0);
            let mut coords = Vec::with_capacity(found.len() * d);
            let mut shells = Vec::with_capacity(found.len());
            let mut values = Vec::with_capacity(found.len());
            for (s, c) in found {
                coords.extend_from_slice(&c);
                shells.push(i64::from(s));
                values.push(table.values[s as usize]);
            }
            debug_assert_eq!(shells.len() as u64, table.cumulative[n_max]);
            Ok(SiteList {
                dimension: d,
                coords,
                shells,
                values,
            })
        }
    }
}

fn check_cap(needed: u64, cap: u64) -> Result<()> {
    if needed > cap {
        Err(Error::ResourceCap {
            what: "sites in window",
            needed,
            cap,
        })
    } else {
        Ok(())
    }
}

/// Maps a partial coordinate prefix to a budget and a complete tuple to its
/// shell index.
enum ShellLookup<'a> {
    L1 { n_max: u64 },
    Linf { n_max: u64 },
    LpExact { p: u32, sums: &'a [u64] },
    LpApprox { p: f64, sums: &'a [f64] },
}

impl<'a> ShellLookup<'a> {
    fn new(spec: &LatticeSpec, table: &'a ShellTable) -> Result<Self> {
        let n_max = table.max_shell() as u64;
        Ok(match (spec.norm, &table.power_sums) {
            (Norm::L1, _) => ShellLookup::L1 { n_max },
            (Norm::Linf, _) => ShellLookup::Linf { n_max },
            (Norm::Lp { .. }, Some(PowerSums::Exact(s))) => ShellLookup::LpExact {
                p: spec.integer_p().expect("exact sums imply integer p"),
                sums: s,
            },
            (Norm::Lp { p }, Some(PowerSums::Approx(s))) => ShellLookup::LpApprox { p, sums: s },
            (Norm::Lp { .. }, None) => {
                return Err(Error::InvalidSpec("Lp table without power sums".into()));
            }
        })
    }

    fn coord_bound(&self) -> i64 {
        match self {
            ShellLookup::L1 { n_max } | ShellLookup::Linf { n_max } => *n_max as i64,
            ShellLookup::LpExact { p, sums } => int_root(*sums.last().unwrap(), *p) as i64,
            ShellLookup::LpApprox { p, sums } => sums.last().unwrap().powf(1.0 / p) as i64 + 1,
        }
    }

    /// Whether a prefix can still be completed inside the window.
    fn prefix_ok(&self, prefix: &[i64]) -> bool {
        match self {
            ShellLookup::L1 { n_max } => {
                prefix.iter().map(|x| x.unsigned_abs()).sum::<u64>() <= *n_max
            }
            ShellLookup::Linf { .. } => true,
            ShellLookup::LpExact { p, sums } => {
                prefix.iter().map(|x| x.unsigned_abs().pow(*p)).sum::<u64>()
                    <= *sums.last().unwrap()
            }
            ShellLookup::LpApprox { p, sums } => {
                let s: f64 = prefix
                    .iter()
                    .map(|x| (x.unsigned_abs() as f64).powf(*p))
                    .sum();
                s <= sums.last().unwrap() * (1.0 + LP_MERGE_RTOL)
            }
        }
    }

    fn shell(&self, z: &[i64]) -> Option<u32> {
        match self {
            ShellLookup::L1 { n_max } => {
                let n: u64 = z.iter().map(|x| x.unsigned_abs()).sum();
                (n <= *n_max).then_some(n as u32)
            }
            ShellLookup::Linf { n_max } => {
                let n = z.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0);
                (n <= *n_max).then_some(n as u32)
            }
            ShellLookup::LpExact { p, sums } => {
                let s: u64 = z.iter().map(|x| x.unsigned_abs().pow(*p)).sum();
                sums.binary_search(&s).ok().map(|i| i as u32)
            }
            ShellLookup::LpApprox { p, sums } => {
                let s: f64 = z.iter().map(|x| (x.unsigned_abs() as f64).powf(*p)).sum();
                let tol = |v: f64| LP_MERGE_RTOL * v.abs().max(s.abs());
                let i = sums.partition_point(|&v| v < s - tol(v));
                (i < sums.len() && (sums[i] - s).abs() <= tol(sums[i])).then_some(i as u32)
            }
        }
    }
}

fn enumerate_box(
    lookup: &ShellLookup<'_>,
    d: usize,
    cur: &mut Vec<i64>,
    out: &mut Vec<(u32, Vec<i64>)>,
) {
    if cur.len() == d {
        if let Some(s) = lookup.shell(cur) {
            out.push((s, cur.clone()));
        }
        return;
    }
    let b = lookup.coord_bound();
    for x in -b..=b {
        cur.push(x);
        if lookup.prefix_ok(cur) {
            enumerate_box(lookup, d, cur, out);
        }
        cur.pop();
    }
}

/// A finite observation window: all sites with shell index at most
/// `max_shell`, with the shell tables needed to normalise mismatches.
#[derive(Clone, Debug)]
pub struct Window {
    pub spec: LatticeSpec,
    pub max_shell: usize,
    pub sites: SiteList,
    pub positive: ShellTable,
    pub negative: Option<ShellTable>,
}

impl Window {
    pub fn new(spec: LatticeSpec, max_shell: usize) -> Result<Self> {
        Self::with_cap(spec, max_shell, DEFAULT_SITE_CAP)
    }

    pub fn with_cap(spec: LatticeSpec, max_shell: usize, cap: u64) -> Result<Self> {
        let positive = enumerate_shells_capped(&spec, max_shell, cap)?;
        let negative = if spec.is_two_sided() {
            Some(negative_shells(&spec, max_shell)?)
        } else {
            None
        };
        let sites = sites_for_table(&spec, &positive, cap)?;
        Ok(Self {
            spec,
            max_shell,
            sites,
            positive,
            negative,
        })
    }

    /// `N' = N - edge_margin`, the last shell the statistics look at.
    pub fn inner_shell(&self, edge_margin: usize) -> Result<usize> {
        if edge_margin >= self.max_shell {
            return Err(Error::InvalidDetector(format!(
                "edge_margin {edge_margin} leaves no shells in a window of {} shells",
                self.max_shell
            )));
        }
        Ok(self.max_shell - edge_margin)
    }

    /// Ids of the sites at the given coordinates.
    pub fn site_ids(&self, coords: &[Vec<i64>]) -> Result<Vec<usize>> {
        let index: std::collections::HashMap<&[i64], usize> = (0..self.sites.len())
            .map(|i| (self.sites.coords(i), i))
            .collect();
        coords
            .iter()
            .map(|c| {
                index.get(c.as_slice()).copied().ok_or_else(|| {
                    Error::InvalidArgument(format!("site {c:?} is outside the window"))
                })
            })
            .collect()
    }
}
