//! Variance of linear statistics `sum_{a in Pi} f(a / s)`.
//!
//! Curves are indexed by a radius `n`; the statistic at radius `n` uses the
//! scale `s = n^alpha`, i.e. the value of `V` on shell `n`. With this choice
//! the i.i.d. exponential variance behaves like `n^{d - 2 alpha}`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::lattice::{l1_shell_count, linf_shell_count, Domain, LatticeSpec, Norm, Window};
use crate::noise::{NoiseModel, NoiseSampler};
use crate::rng::{derive_seed, stream_rng, STREAM_BOOTSTRAP};
use crate::stats::{ols, quantile, CompensatedSum};
use crate::{Error, Result};

/// Relative size of a shell term below which the analytic sum stops.
pub const TRUNCATION_RTOL: f64 = 1e-14;
/// The truncation warning threshold on the evaluated tail.
pub const TAIL_WARN_RTOL: f64 = 1e-12;
pub const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `f(x) = e^{-x}`.
    Exponential,
    /// Piecewise-linear through `(xs, ys)`, constant outside the table.
    Custom { xs: Vec<f64>, ys: Vec<f64> },
}

impl TestFunction {
    pub fn constant_one() -> Self {
        TestFunction::Custom {
            xs: vec![0.0, 1.0],
            ys: vec![1.0, 1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let TestFunction::Custom { xs, ys } = self {
            if xs.len() != ys.len() || xs.len() < 2 {
                return Err(Error::InvalidArgument(
                    "custom test function needs matching tables of length >= 2".into(),
                ));
            }
            if !xs.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::InvalidArgument(
                    "custom test function abscissae must increase".into(),
                ));
            }
            if !xs.iter().chain(ys).all(|v| v.is_finite()) {
                return Err(Error::InvalidArgument(
                    "custom test function must be finite".into(),
                ));
            }
            if (self.eval(0.0) - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(
                    "custom test function must satisfy f(0) = 1".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFunction::Exponential => (-x).exp(),
            TestFunction::Custom { xs, ys } => {
                let k = xs.partition_point(|&t| t <= x);
                if k == 0 {
                    ys[0]
                } else if k == xs.len() {
                    ys[k - 1]
                } else {
                    let t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
                    ys[k - 1] + t * (ys[k] - ys[k - 1])
                }
            }
        }
    }

    /// `f_s(x) = f(x / s)`.
    pub fn scaled(&self, x: f64, scale: f64) -> f64 {
        self.eval(x / scale)
    }
}

/// `s = n^alpha`.
pub fn scale_for(spec: &LatticeSpec, n: f64) -> f64 {
    n.powf(spec.alpha)
}

fn shell_count(spec: &LatticeSpec, m: u64) -> Result<f64> {
    match (spec.domain, spec.norm) {
        (Domain::Full, Norm::L1) => Ok(l1_shell_count(spec.dimension as u64, m)? as f64),
        (Domain::Full, Norm::Linf) => Ok(linf_shell_count(spec.dimension as u32, m)? as f64),
        _ => Err(Error::InvalidSpec(
            "analytic variance needs the full lattice with the L1 or Linf norm".into(),
        )),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticVariance {
    pub value: f64,
    /// Shells summed in the head.
    pub shells: usize,
    /// Sum of the remaining terms, evaluated until they underflow.
    pub tail: f64,
    /// `tail > 1e-12 * value`.
    pub tail_warning: bool,
}

/// `sum_m mult(m) e^{-2 m^alpha / s} e^{sigma^2/s^2} (e^{sigma^2/s^2} - 1)`
/// for i.i.d. `N(0, sigma^2)` noise and `f = e^{-x}`, `s = n^alpha`.
///
/// The head stops at the first shell past the peak of
/// `mult(m) e^{-2 m^alpha / s}` whose term is below `1e-14` of the running
/// total; the tail is then summed on its own and reported.
pub fn analytic_variance_exponential(
    spec: &LatticeSpec,
    variance: f64,
    n: f64,
    max_shell: Option<usize>,
) -> Result<AnalyticVariance> {
    spec.validate()?;
    if !(variance >= 0.0 && variance.is_finite()) {
        return Err(Error::InvalidNoise(format!(
            "variance must be finite and >= 0, got {variance}"
        )));
    }
    if !(n > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "radius must be positive, got {n}"
        )));
    }
    let s = scale_for(spec, n);
    let a = variance / (s * s);
    let factor = a.exp() * a.exp_m1();
    let weight = |m: u64| -> Result<f64> {
        Ok(shell_count(spec, m)? * (-2.0 * (m as f64).powf(spec.alpha) / s).exp())
    };
    // mult(m) ~ m^{d-1}, so the weight peaks near m^alpha = s (d - 1) / (2 alpha)
    let peak = (s * (spec.dimension as f64 - 1.0) / (2.0 * spec.alpha)).powf(1.0 / spec.alpha);
    let cap = max_shell.map_or(u64::MAX, |c| c as u64);

    let mut head = CompensatedSum::default();
    let mut m = 0u64;
    loop {
        let w = weight(m)?;
        head.add(w);
        m += 1;
        if m > cap || ((m as f64) > peak && w < TRUNCATION_RTOL * head.value()) {
            break;
        }
    }
    let mut tail = CompensatedSum::default();
    if m <= cap {
        let mut j = m;
        loop {
            let w = weight(j)?;
            if w == 0.0 || w < f64::MIN_POSITIVE * 1e16 {
                break;
            }
            tail.add(w);
            j += 1;
        }
    }
    let value = factor * head.value();
    let tail = factor * tail.value();
    Ok(AnalyticVariance {
        value,
        shells: m as usize,
        tail,
        tail_warning: tail > TAIL_WARN_RTOL * value,
    })
}

/// Smallest window radius `M` whose shells carry all but `rel_tol` of
/// `sum_m mult(m) e^{-2 m^alpha / s}` (the i.i.d. variance weights).
pub fn variance_window_shell(spec: &LatticeSpec, n: f64, rel_tol: f64) -> Result<usize> {
    let s = scale_for(spec, n);
    let full = analytic_variance_exponential(spec, 1.0, n, None)?;
    let total = (full.value + full.tail) / ((1.0 / (s * s)).exp() * (1.0 / (s * s)).exp_m1());
    let mut acc = 0.0;
    let mut m = 0u64;
    loop {
        acc += shell_count(spec, m)? * (-2.0 * (m as f64).powf(spec.alpha) / s).exp();
        if total - acc <= rel_tol * total {
            return Ok(m as usize);
        }
        m += 1;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub n: f64,
    pub mean: f64,
    pub stderr: f64,
    pub reps: usize,
}

fn statistic(window: &Window, tf: &TestFunction, scale: f64, noise: &[f64]) -> f64 {
    let mut acc = CompensatedSum::default();
    for (v, g) in window.sites.values.iter().zip(noise) {
        acc.add(tf.scaled(v + g, scale));
    }
    acc.value()
}

fn per_rep_statistics(
    spec: &LatticeSpec,
    noise: &NoiseModel,
    tf: &TestFunction,
    scales: &[f64],
    max_shell: usize,
    reps: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<Vec<f64>>> {
    tf.validate()?;
    if reps < 2 {
        return Err(Error::InvalidArgument(
            "Monte Carlo estimates need reps >= 2".into(),
        ));
    }
    let window = Window::new(*spec, max_shell)?;
    let sampler = NoiseSampler::new(noise, &window.sites)?;
    Ok(exec.map(reps, |r| {
        let g = sampler.sample(derive_seed(seed, r as u64)).values;
        scales
            .iter()
            .map(|&s| statistic(&window, tf, s, &g))
            .collect()
    }))
}

/// Unbiased variance with its standard error from the fourth central moment.
fn variance_with_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = crate::stats::mean(xs);
    let (mut m2, mut m4) = (0.0, 0.0);
    for &x in xs {
        let d = (x - m) * (x - m);
        m2 += d;
        m4 += d * d;
    }
    let var = m2 / (n - 1.0);
    let mu2 = m2 / n;
    let mu4 = m4 / n;
    let v = (mu4 - (n - 3.0) / (n - 1.0) * mu2 * mu2) / n;
    (var, v.max(0.0).sqrt())
}

/// Monte Carlo `Var[sum_{z in window} f_s(V(z) + g_z)]` at radius `n`.
pub fn mc_variance(
    spec: &LatticeSpec,
    noise: &NoiseModel,
    tf: &TestFunction,
    n: f64,
    max_shell: usize,
    reps: usize,
    seed: u64,
    exec: Execution,
) -> Result<McEstimate> {
    let rows = per_rep_statistics(
        spec,
        noise,
        tf,
        &[scale_for(spec, n)],
        max_shell,
        reps,
        seed,
        exec,
    )?;
    let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let (mean, stderr) = variance_with_stderr(&xs);
    Ok(McEstimate {
        n,
        mean,
        stderr,
        reps,
    })
}

/// Monte Carlo `Cov(sum f_{s_n}(a), sum f_{s_m}(a))` on shared noise draws.
pub fn covariance_statistic(
    spec: &LatticeSpec,
    noise: &NoiseModel,
    tf: &TestFunction,
    n: f64,
    m: f64,
    max_shell: usize,
    reps: usize,
    seed: u64,
    exec: Execution,
) -> Result<McEstimate> {
    let scales = [scale_for(spec, n), scale_for(spec, m)];
    let rows = per_rep_statistics(spec, noise, tf, &scales, max_shell, reps, seed, exec)?;
    let r = rows.len() as f64;
    let mx = rows.iter().map(|v| v[0]).sum::<f64>() / r;
    let my = rows.iter().map(|v| v[1]).sum::<f64>() / r;
    let prods: Vec<f64> = rows.iter().map(|v| (v[0] - mx) * (v[1] - my)).collect();
    let cov = prods.iter().sum::<f64>() / (r - 1.0);
    let spread = crate::stats::sample_variance(&prods);
    Ok(McEstimate {
        n,
        mean: cov,
        stderr: (spread / r).sqrt(),
        reps: rows.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceCurve {
    pub scales: Vec<f64>,
    pub analytic: Option<Vec<f64>>,
    pub mc_mean: Option<Vec<f64>>,
    pub mc_stderr: Option<Vec<f64>>,
    pub reps: usize,
    pub seed: u64,
}

impl VarianceCurve {
    pub fn analytic(spec: &LatticeSpec, variance: f64, scales: &[f64]) -> Result<Self> {
        let values = scales
            .iter()
            .map(|&n| analytic_variance_exponential(spec, variance, n, None).map(|a| a.value))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            scales: scales.to_vec(),
            analytic: Some(values),
            mc_mean: None,
            mc_stderr: None,
            reps: 0,
            seed: 0,
        })
    }

    /// Values used by the scaling fit: analytic when present, else MC.
    pub fn fit_values(&self) -> Option<&[f64]> {
        self.analytic.as_deref().or(self.mc_mean.as_deref())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// 2.5% and 97.5% pair-bootstrap quantiles of the slope.
    pub ci_low: f64,
    pub ci_high: f64,
    pub resamples: usize,
}

/// Least-squares slope of `log Var` against `log n`, with a pair bootstrap.
pub fn variance_scaling_fit(curve: &VarianceCurve, seed: u64) -> Result<ScalingFit> {
    let ys = curve
        .fit_values()
        .ok_or_else(|| Error::DegenerateFit("curve has no values".into()))?;
    if ys.len() != curve.scales.len() {
        return Err(Error::InvalidArgument(
            "curve scales and values differ in length".into(),
        ));
    }
    if curve.scales.len() < 5 {
        return Err(Error::DegenerateFit(format!(
            "need at least 5 scales, got {}",
            curve.scales.len()
        )));
    }
    let (lo, hi) = curve
        .scales
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    if !(lo > 0.0) || hi / lo < 10.0 - 1e-9 {
        return Err(Error::DegenerateFit(
            "scales must be positive and span a decade".into(),
        ));
    }
    if ys.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::DegenerateFit(
            "every variance must be positive".into(),
        ));
    }
    let lx: Vec<f64> = curve.scales.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let fit = ols(&lx, &ly).ok_or_else(|| Error::DegenerateFit("least squares failed".into()))?;

    let mut rng = stream_rng(seed, STREAM_BOOTSTRAP);
    let k = lx.len();
    let mut slopes = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let (mut bx, mut by) = (vec![0.0; k], vec![0.0; k]);
    while slopes.len() < BOOTSTRAP_RESAMPLES {
        for i in 0..k {
            let j = rng.random_range(0..k);
            bx[i] = lx[j];
            by[i] = ly[j];
        }
        // resamples with a single distinct abscissa have no slope
        if let Some(f) = ols(&bx, &by) {
            slopes.push(f.slope);
        }
    }
    slopes.sort_by(f64::total_cmp);
    Ok(ScalingFit {
        slope: fit.slope,
        intercept: fit.intercept,
        slope_stderr: fit.slope_stderr,
        ci_low: quantile(&slopes, 0.025),
        ci_high: quantile(&slopes, 0.975),
        resamples: BOOTSTRAP_RESAMPLES,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic_line() -> LatticeSpec {
        LatticeSpec::new(1, Norm::L1, 2.0)
    }

    #[test]
    fn zero_variance_noise() {
        let a = analytic_variance_exponential(&quadratic_line(), 0.0, 10.0, None).unwrap();
        assert_eq!(a.value, 0.0);
    }

    #[test]
    fn direct_series_on_the_line() {
        // 1 + 2 sum_{m >= 1} e^{-2 m^2 / 100}, times the lognormal factor
        let s = 100.0f64;
        let mut direct = 1.0;
        for m in 1..200 {
            direct += 2.0 * (-2.0 * (m as f64).powi(2) / s).exp();
        }
        let a = 1.0 / (s * s);
        direct *= a.exp() * (a.exp() - 1.0);
        let v = analytic_variance_exponential(&quadratic_line(), 1.0, 10.0, None).unwrap();
        assert!((v.value - direct).abs() <= 1e-12 * direct);
        assert!(!v.tail_warning);
    }

    #[test]
    fn custom_function_interpolates() {
        let f = TestFunction::Custom {
            xs: vec![0.0, 1.0, 2.0],
            ys: vec![1.0, 0.5, 0.0],
        };
        f.validate().unwrap();
        assert_eq!(f.eval(-1.0), 1.0);
        assert_eq!(f.eval(1.5), 0.25);
        assert_eq!(f.eval(7.0), 0.0);
        assert!(TestFunction::Custom {
            xs: vec![0.0, 1.0],
            ys: vec![2.0, 1.0]
        }
        .validate()
        .is_err());
    }

    #[test]
    fn fit_rejects_short_curves() {
        let c = VarianceCurve::analytic(&quadratic_line(), 1.0, &[10.0, 20.0, 40.0]).unwrap();
        assert!(matches!(
            variance_scaling_fit(&c, 0),
            Err(Error::DegenerateFit(_))
        ));
    }

    #[test]
    fn constant_curve_has_zero_slope() {
        let c = VarianceCurve {
            scales: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            analytic: Some(vec![3.0; 5]),
            mc_mean: None,
            mc_stderr: None,
            reps: 0,
            seed: 0,
        };
        let f = variance_scaling_fit(&c, 1).unwrap();
        assert!(f.slope.abs() < 1e-12);
        assert!(f.ci_low.abs() < 1e-12 && f.ci_high.abs() < 1e-12);
    }
}
