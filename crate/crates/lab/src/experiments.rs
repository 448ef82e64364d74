//! The named experiments. Each returns its result files as bytes plus a
//! small JSON summary for the manifest; nothing here touches the disk.

use serde::Serialize;
use serde_json::{json, Value};

use rigidity_core::detector::{detector_profile, two_sided_profile, DetectorProfile};
use rigidity_core::exec::Execution;
use rigidity_core::lattice::Window;
use rigidity_core::linear_stats::{
    mc_variance, variance_scaling_fit, variance_window_shell, TestFunction, VarianceCurve,
};
use rigidity_core::noise::{
    check_assumption_i, check_assumption_negative, NoiseModel, NoiseSampler,
};
use rigidity_core::process::{Process, Side};
use rigidity_core::rng::derive_seed;
use rigidity_core::shepp::{ellp_condition, shepp_sum};
use rigidity_core::stats;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{LabError, LabResult};

/// In-memory results of one run.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub results_csv: Vec<u8>,
    pub profile_json: Vec<u8>,
    pub trial_seeds: Vec<u64>,
    pub summary: Value,
}

pub fn run_experiment(config: &ExperimentConfig, exec: Execution) -> LabResult<RunArtifacts> {
    config.validate()?;
    match config.experiment {
        Experiment::DetectorTrial => detector_trial(config, exec),
        Experiment::ThresholdSweep => threshold_sweep(config, exec),
        Experiment::VarianceCurve => variance_curve(config, exec),
        Experiment::SheppReport => shepp_report(config),
        Experiment::AssumptionCheck => assumption_check(config, exec),
        Experiment::EllpReport => ellp_report(config),
    }
}

pub fn trial_seeds(seed: u64, trials: usize) -> Vec<u64> {
    (0..trials as u64).map(|t| derive_seed(seed, t)).collect()
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn json_bytes<T: Serialize>(value: &T) -> LabResult<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> LabResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| LabError::Io(e.into_error()))
}

#[derive(Clone, Debug, Serialize)]
struct TrialRecord {
    trial: usize,
    seed: u64,
    true_count: usize,
    exited: usize,
    points: usize,
    profile: DetectorProfile,
}

fn simulate_trials(
    config: &ExperimentConfig,
    exec: Execution,
) -> LabResult<(Vec<TrialRecord>, usize)> {
    let window = Window::new(config.lattice()?, config.window_config()?.max_shell)?;
    let sites = window.sites.len();
    let process = Process::new(window, config.noise.clone())?;
    let cut = config.cut();
    let seeds = trial_seeds(config.seed, config.trials);
    let records = exec.try_map(config.trials, |t| -> LabResult<TrialRecord> {
        let (obs, truth) = process.simulate(&config.deletion, &cut, seeds[t])?;
        let profile = match obs.side {
            Side::TwoSided => two_sided_profile(&process.window, &config.detector, &obs)?,
            _ => detector_profile(&process.window, &config.detector, &obs)?,
        };
        // ground truth is read only after the detector has finished
        Ok(TrialRecord {
            trial: t,
            seed: seeds[t],
            true_count: truth.deleted().len(),
            exited: truth.exited(),
            points: obs.points.len(),
            profile,
        })
    })?;
    Ok((records, sites))
}

fn k_hat_at(profile: &DetectorProfile, tau: f64) -> Option<usize> {
    profile.d.iter().position(|x| x.is_some_and(|v| v <= tau))
}

fn detector_trial(config: &ExperimentConfig, exec: Execution) -> LabResult<RunArtifacts> {
    let (records, sites) = simulate_trials(config, exec)?;
    let k_max = config.detector.k_max;
    let mut header: Vec<String> = [
        "trial",
        "seed",
        "true_count",
        "k_hat",
        "correct",
        "exited",
        "points",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((0..=k_max).map(|k| format!("d_{k}")));
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            let mut row = vec![
                r.trial.to_string(),
                r.seed.to_string(),
                r.true_count.to_string(),
                r.profile.k_hat.map(|k| k.to_string()).unwrap_or_default(),
                (r.profile.k_hat == Some(r.true_count)).to_string(),
                r.exited.to_string(),
                r.points.to_string(),
            ];
            row.extend(r.profile.d.iter().map(|&x| fmt_opt(x)));
            row
        })
        .collect();
    let correct = records
        .iter()
        .filter(|r| r.profile.k_hat == Some(r.true_count))
        .count();
    let accuracy = correct as f64 / records.len() as f64;
    let live: usize = records.iter().map(|r| sites - r.true_count).sum();
    let exited: usize = records.iter().map(|r| r.exited).sum();
    let summary = json!({
        "trials": records.len(),
        "correct": correct,
        "accuracy": accuracy,
        "window_sites": sites,
        "exit_fraction": exited as f64 / live as f64,
    });
    let profile = json!({
        "experiment": config.experiment.name(),
        "accuracy": accuracy,
        "trials": records,
    });
    Ok(RunArtifacts {
        results_csv: csv_bytes(&header, &rows)?,
        profile_json: json_bytes(&profile)?,
        trial_seeds: records.iter().map(|r| r.seed).collect(),
        summary,
    })
}

fn threshold_sweep(config: &ExperimentConfig, exec: Execution) -> LabResult<RunArtifacts> {
    let taus = &config.sweep.as_ref().expect("validated").taus;
    let (records, _) = simulate_trials(config, exec)?;
    let header: Vec<String> = ["tau", "trials", "correct", "accuracy", "undetermined"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::new();
    let mut curve = Vec::new();
    for &tau in taus {
        let hats: Vec<Option<usize>> = records.iter().map(|r| k_hat_at(&r.profile, tau)).collect();
        let correct = records
            .iter()
            .zip(&hats)
            .filter(|(r, h)| **h == Some(r.true_count))
            .count();
        let undetermined = hats.iter().filter(|h| h.is_none()).count();
        let accuracy = correct as f64 / records.len() as f64;
        rows.push(vec![
            tau.to_string(),
            records.len().to_string(),
            correct.to_string(),
            accuracy.to_string(),
            undetermined.to_string(),
        ]);
        curve.push(json!({ "tau": tau, "accuracy": accuracy, "k_hat": hats }));
    }
    let d: Vec<_> = records
        .iter()
        .map(|r| json!({ "trial": r.trial, "seed": r.seed, "true_count": r.true_count, "d": r.profile.d }))
        .collect();
    let summary = json!({ "trials": records.len(), "taus": taus });
    Ok(RunArtifacts {
        results_csv: csv_bytes(&header, &rows)?,
        profile_json: json_bytes(
            &json!({ "experiment": config.experiment.name(), "sweep": curve, "profiles": d }),
        )?,
        trial_seeds: records.iter().map(|r| r.seed).collect(),
        summary,
    })
}

fn variance_curve(config: &ExperimentConfig, exec: Execution) -> LabResult<RunArtifacts> {
    let params = config.variance.as_ref().expect("validated");
    let spec = config.lattice()?;
    let scales = &params.scales;
    let mut curve = match config.noise {
        NoiseModel::Iid { variance } => VarianceCurve::analytic(&spec, variance, scales)?,
        _ => VarianceCurve {
            scales: scales.clone(),
            analytic: None,
            mc_mean: None,
            mc_stderr: None,
            reps: 0,
            seed: config.seed,
        },
    };
    let seeds = trial_seeds(config.seed, scales.len());
    if params.reps >= 2 {
        let tf = TestFunction::Exponential;
        let mut means = Vec::with_capacity(scales.len());
        let mut errs = Vec::with_capacity(scales.len());
        for (i, &n) in scales.iter().enumerate() {
            let shell = variance_window_shell(&spec, n, params.window_tol)?;
            let est = mc_variance(
                &spec,
                &config.noise,
                &tf,
                n,
                shell,
                params.reps,
                seeds[i],
                exec,
            )?;
            means.push(est.mean);
            errs.push(est.stderr);
        }
        curve.mc_mean = Some(means);
        curve.mc_stderr = Some(errs);
        curve.reps = params.reps;
        curve.seed = config.seed;
    } else if curve.analytic.is_none() {
        return Err(LabError::Config(
            "variance-curve without i.i.d. noise needs reps >= 2 for Monte Carlo".into(),
        ));
    }
    let fit = match variance_scaling_fit(&curve, config.seed) {
        Ok(f) => Some(f),
        Err(rigidity_core::Error::DegenerateFit(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let header: Vec<String> = ["n", "scale", "analytic", "mc_mean", "mc_stderr"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let at = |v: &Option<Vec<f64>>, i: usize| fmt_opt(v.as_ref().map(|x| x[i]));
    let rows: Vec<Vec<String>> = scales
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            vec![
                n.to_string(),
                rigidity_core::linear_stats::scale_for(&spec, n).to_string(),
                at(&curve.analytic, i),
                at(&curve.mc_mean, i),
                at(&curve.mc_stderr, i),
            ]
        })
        .collect();
    let summary = json!({
        "slope": fit.map(|f| f.slope),
        "ci": fit.map(|f| [f.ci_low, f.ci_high]),
    });
    Ok(RunArtifacts {
        results_csv: csv_bytes(&header, &rows)?,
        profile_json: json_bytes(
            &json!({ "experiment": config.experiment.name(), "curve": curve, "fit": fit }),
        )?,
        trial_seeds: if params.reps >= 2 { seeds } else { Vec::new() },
        summary,
    })
}

fn shepp_report(config: &ExperimentConfig) -> LabResult<RunArtifacts> {
    let params = config.shepp.as_ref().expect("validated");
    let report = shepp_sum(&params.scenario, params.i_max)?;
    let header: Vec<String> = ["index", "partial_sum", "last_term"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = report
        .checkpoints
        .iter()
        .map(|c| {
            vec![
                c.index.to_string(),
                c.partial_sum.to_string(),
                c.last_term.to_string(),
            ]
        })
        .collect();
    let summary = json!({
        "verdict": report.verdict,
        "tail_exponent": report.tail_exponent,
        "tail_stderr": report.tail_stderr,
    });
    Ok(RunArtifacts {
        results_csv: csv_bytes(&header, &rows)?,
        profile_json: json_bytes(
            &json!({ "experiment": config.experiment.name(), "report": report }),
        )?,
        trial_seeds: Vec::new(),
        summary,
    })
}

fn assumption_check(config: &ExperimentConfig, exec: Execution) -> LabResult<RunArtifacts> {
    let shells = &config.assumption.as_ref().expect("validated").shells;
    let window = Window::new(config.lattice()?, config.window_config()?.max_shell)?;
    let sampler = NoiseSampler::new(&config.noise, &window.sites)?;
    let seeds = trial_seeds(config.seed, config.trials);
    // per trial: positive ratios, then negative ratios if two-sided
    let per_trial: Vec<(Vec<f64>, Option<Vec<f64>>)> = exec.map(seeds.len(), |t| {
        let g = sampler.sample(seeds[t]).values;
        let pos = check_assumption_i(&g, &window.sites, &window.positive);
        let neg = window
            .negative
            .as_ref()
            .map(|table| check_assumption_negative(&g, &window.sites, table));
        (pos, neg)
    });
    let header: Vec<String> = ["side", "shell", "gap", "mean_ratio", "stderr", "max_ratio"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::new();
    let mut sides = vec![("positive", &window.positive, false)];
    if let Some(t) = window.negative.as_ref() {
        sides.push(("negative", t, true));
    }
    for (name, table, negative) in sides {
        for &n in shells {
            let xs: Vec<f64> = per_trial
                .iter()
                .map(|(p, q)| {
                    if negative {
                        q.as_ref().expect("two-sided")[n - 1]
                    } else {
                        p[n - 1]
                    }
                })
                .collect();
            let mean = stats::mean(&xs);
            let se = (stats::sample_variance(&xs) / xs.len() as f64).sqrt();
            let max = xs.iter().copied().fold(0.0, f64::max);
            rows.push(vec![
                name.to_string(),
                n.to_string(),
                table.gap(n).to_string(),
                mean.to_string(),
                se.to_string(),
                max.to_string(),
            ]);
        }
    }
    let summary = json!({ "trials": seeds.len(), "shells": shells });
    let ratios: Vec<_> = per_trial
        .iter()
        .map(|(p, q)| json!({ "positive": p, "negative": q }))
        .collect();
    Ok(RunArtifacts {
        results_csv: csv_bytes(&header, &rows)?,
        profile_json: json_bytes(
            &json!({ "experiment": config.experiment.name(), "ratios": ratios }),
        )?,
        trial_seeds: seeds,
        summary,
    })
}

fn ellp_report(config: &ExperimentConfig) -> LabResult<RunArtifacts> {
    let max_n = config.ellp.as_ref().expect("validated").max_n;
    let report = ellp_condition(&config.lattice()?, max_n)?;
    let header: Vec<String> = ["n", "ratio"].iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = report
        .ratios
        .iter()
        .enumerate()
        .map(|(i, &r)| vec![(i + 1).to_string(), fmt_opt(r)])
        .collect();
    let summary = json!({ "verdict": report.verdict, "trend_slope": report.trend_slope, "gap_zero": report.gap_zero.len() });
    Ok(RunArtifacts {
        results_csv: csv_bytes(&header, &rows)?,
        profile_json: json_bytes(
            &json!({ "experiment": config.experiment.name(), "report": report }),
        )?,
        trial_seeds: Vec::new(),
        summary,
    })
}
