use rigidity_core::exec::Execution;
use rigidity_core::lattice::{l1_shell_count, LatticeSpec, Norm};
use rigidity_core::linear_stats::{
    analytic_variance_exponential, covariance_statistic, mc_variance, scale_for,
    variance_scaling_fit, variance_window_shell, TestFunction, VarianceCurve,
};
use rigidity_core::noise::{Kernel, NoiseModel};

/// `Var[e^{-(r + g)/s}]` for `g ~ N(0, v)` by trapezoidal quadrature.
fn quadrature_variance(r: f64, v: f64, s: f64) -> f64 {
    let sd = v.sqrt();
    let steps = 20_000;
    let (lo, hi) = (-12.0 * sd, 12.0 * sd);
    let h = (hi - lo) / steps as f64;
    let (mut m1, mut m2) = (0.0, 0.0);
    for i in 0..=steps {
        let g = lo + i as f64 * h;
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        let dens = (-g * g / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt();
        let f = (-(r + g) / s).exp();
        m1 += w * h * dens * f;
        m2 += w * h * dens * f * f;
    }
    m2 - m1 * m1
}

#[test]
fn analytic_matches_quadrature_on_the_line() {
    let spec = LatticeSpec::new(1, Norm::L1, 2.0);
    let s = scale_for(&spec, 10.0);
    let mut total = 0.0;
    for m in 0..100u64 {
        let mult = l1_shell_count(1, m).unwrap() as f64;
        total += mult * quadrature_variance((m as f64).powi(2), 1.0, s);
    }
    let a = analytic_variance_exponential(&spec, 1.0, 10.0, None).unwrap();
    assert!(
        (a.value - total).abs() <= 1e-8 * total,
        "{} vs {}",
        a.value,
        total
    );
}

#[test]
fn vanishing_variance_above_half_dimension() {
    let spec = LatticeSpec::new(2, Norm::L1, 1.5);
    let ns: Vec<f64> = (1..=10).map(|i| 10.0 * i as f64).collect();
    let vals: Vec<f64> = ns
        .iter()
        .map(|&n| {
            analytic_variance_exponential(&spec, 1.0, n, None)
                .unwrap()
                .value
        })
        .collect();
    assert!(vals.windows(2).all(|w| w[1] < w[0]));
    assert!(vals[9] < 1e-2);
}

#[test]
fn growth_exponent_below_half_dimension() {
    let spec = LatticeSpec::new(2, Norm::Linf, 0.75);
    let ns: Vec<f64> = (0..8).map(|i| 10.0 * 2f64.powf(i as f64 * 0.5)).collect();
    let curve = VarianceCurve::analytic(&spec, 1.0, &ns).unwrap();
    let fit = variance_scaling_fit(&curve, 4).unwrap();
    assert!((fit.slope - 0.5).abs() <= 0.1, "slope {}", fit.slope);
    assert!(fit.ci_low <= fit.slope && fit.slope <= fit.ci_high);

    let spec = LatticeSpec::new(1, Norm::L1, 2.0);
    let curve = VarianceCurve::analytic(&spec, 1.0, &ns).unwrap();
    assert!(variance_scaling_fit(&curve, 4).unwrap().slope < 0.0);
}

#[test]
fn monte_carlo_agrees_with_closed_form() {
    let spec = LatticeSpec::new(2, Norm::Linf, 1.5);
    let n = 10.0;
    let shells = variance_window_shell(&spec, n, 1e-6).unwrap();
    let tf = TestFunction::Exponential;
    let iid = NoiseModel::Iid { variance: 1.0 };
    let mc = mc_variance(&spec, &iid, &tf, n, shells, 400, 17, Execution::Parallel).unwrap();
    let exact = analytic_variance_exponential(&spec, 1.0, n, None)
        .unwrap()
        .value;
    assert!(
        (mc.mean - exact).abs() <= 3.0 * mc.stderr,
        "{mc:?} vs {exact}"
    );
}

#[test]
fn shared_noise_with_constant_function_has_no_variance() {
    let spec = LatticeSpec::new(1, Norm::L1, 1.0);
    let mc = mc_variance(
        &spec,
        &NoiseModel::Shared { variance: 1.0 },
        &TestFunction::constant_one(),
        5.0,
        30,
        50,
        1,
        Execution::Sequential,
    )
    .unwrap();
    assert_eq!(mc.mean, 0.0);
}

#[test]
fn positive_correlation_inflates_variance() {
    let spec = LatticeSpec::new(1, Norm::L1, 1.0);
    let tf = TestFunction::Exponential;
    let shells = variance_window_shell(&spec, 20.0, 1e-6).unwrap();
    let iid = mc_variance(
        &spec,
        &NoiseModel::Iid { variance: 1.0 },
        &tf,
        20.0,
        shells,
        400,
        5,
        Execution::Parallel,
    )
    .unwrap();
    let kernel = NoiseModel::Kernel {
        kernel: Kernel::Exponential,
        variance: 1.0,
        length_scale: 5.0,
    };
    let cor = mc_variance(
        &spec,
        &kernel,
        &tf,
        20.0,
        shells,
        400,
        5,
        Execution::Parallel,
    )
    .unwrap();
    assert!(
        cor.mean - 3.0 * cor.stderr > iid.mean + 3.0 * iid.stderr,
        "{cor:?} vs {iid:?}"
    );
}

#[test]
fn covariance_at_equal_scales_is_the_variance() {
    let spec = LatticeSpec::new(1, Norm::L1, 1.0);
    let tf = TestFunction::Exponential;
    let iid = NoiseModel::Iid { variance: 1.0 };
    let v = mc_variance(&spec, &iid, &tf, 8.0, 80, 300, 2, Execution::Parallel).unwrap();
    let c =
        covariance_statistic(&spec, &iid, &tf, 8.0, 8.0, 80, 300, 2, Execution::Parallel).unwrap();
    assert!((v.mean - c.mean).abs() <= 1e-9 * v.mean);
    let zero = covariance_statistic(
        &spec,
        &NoiseModel::Zero,
        &tf,
        8.0,
        4.0,
        80,
        10,
        2,
        Execution::Parallel,
    )
    .unwrap();
    assert!(zero.mean.abs() <= 1e-20);
}

#[test]
fn parallel_and_sequential_estimates_agree() {
    let spec = LatticeSpec::new(1, Norm::L1, 1.0);
    let tf = TestFunction::Exponential;
    let iid = NoiseModel::Iid { variance: 1.0 };
    let a = mc_variance(&spec, &iid, &tf, 8.0, 80, 64, 9, Execution::Parallel).unwrap();
    let b = mc_variance(&spec, &iid, &tf, 8.0, 80, 64, 9, Execution::Sequential).unwrap();
    assert_eq!(a, b);
}
