use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rigidity_core::detector::{
    brute_force_fk, chains_for_match, detector_profile, solve_instance, truncated_fk,
    two_sided_profile, DetectorConfig, Instance,
};
use rigidity_core::lattice::{LatticeSpec, Norm, Window};
use rigidity_core::noise::NoiseModel;
use rigidity_core::process::{CutRule, Deletion, Process};
use rigidity_core::rng::derive_seed;
use rigidity_core::Error;

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Small instances with ties on integer grids, so that runs and clamps
/// matter.
fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>, f64, f64) {
    let l = rng.random_range(1..=8);
    let p = rng.random_range(0..=l);
    let sites = sorted((0..l).map(|_| f64::from(rng.random_range(0..6))).collect());
    let points = sorted(
        (0..p)
            .map(|_| f64::from(rng.random_range(-2..12)) * 0.5)
            .collect(),
    );
    let upper = f64::from(rng.random_range(1..6));
    let normalizer = f64::from(rng.random_range(1..4));
    (sites, points, upper, normalizer)
}

#[test]
fn dp_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut feasible = 0;
    for _ in 0..500 {
        let (sites, points, upper, normalizer) = random_instance(&mut rng);
        let inst = Instance {
            sites: &sites,
            points: &points,
            upper,
            normalizer,
        };
        let dp = solve_instance(inst, 2).unwrap();
        for k in 0..=2 {
            let oracle = brute_force_fk(inst, k).unwrap();
            let got = dp[k].as_ref().map(|x| x.0);
            match (got, oracle) {
                (Some(a), Some(b)) => {
                    assert!((a - b).abs() <= 1e-12, "k={k} dp={a} oracle={b} {inst:?}");
                    feasible += 1;
                }
                (None, None) => {}
                _ => panic!("k={k} dp={got:?} oracle={oracle:?} {inst:?}"),
            }
        }
    }
    assert!(feasible > 500);
}

#[test]
fn witness_reproduces_the_bottleneck() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..300 {
        let (sites, points, upper, normalizer) = random_instance(&mut rng);
        let inst = Instance {
            sites: &sites,
            points: &points,
            upper,
            normalizer,
        };
        for (v, assign) in solve_instance(inst, 3).unwrap().into_iter().flatten() {
            let mut seen = assign.clone();
            seen.dedup();
            assert_eq!(seen.len(), assign.len());
            let worst = points
                .iter()
                .zip(&assign)
                .map(|(&p, &i)| inst.cost(p, sites[i]))
                .fold(0.0f64, f64::max);
            assert_eq!(worst, v);
        }
    }
}

/// Gaps of `n^alpha` are nondecreasing for `alpha >= 1`.
#[test]
fn zero_noise_dichotomy() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..100 {
        let (spec, n) = match trial % 3 {
            0 => (
                LatticeSpec::new(1, Norm::L1, rng.random_range(1.0..2.5)),
                rng.random_range(8..30),
            ),
            1 => (
                LatticeSpec::new(2, Norm::Linf, rng.random_range(1.0..2.0)),
                rng.random_range(6..14),
            ),
            _ => (
                LatticeSpec::naturals(rng.random_range(1.0..3.0)),
                rng.random_range(8..30),
            ),
        };
        let em = rng.random_range(1..4);
        let count = rng.random_range(0..=3);
        let inner = n - em;
        let config = DetectorConfig {
            k_max: 4,
            tau: 0.5,
            edge_margin: em,
        };
        let process = Process::new(Window::new(spec, n).unwrap(), NoiseModel::Zero).unwrap();
        let deletion = Deletion::Random {
            count,
            max_shell: inner - 1,
        };
        let (obs, _) = process
            .simulate(&deletion, &CutRule::default_for(em), trial)
            .unwrap();
        let profile = detector_profile(&process.window, &config, &obs).unwrap();
        assert_eq!(profile.d[count], Some(0.0), "trial {trial}");
        for k in 0..count {
            if let Some(v) = profile.d[k] {
                assert!(v >= 1.0, "trial {trial}: D_{k} = {v}");
            }
        }
        assert_eq!(profile.k_hat, Some(count));
    }
}

/// `V(z) = z` on the naturals with one shared shift `g` and `{1..5}`
/// deleted: the observed points are `{k + g : k > 5}`, and matching them with
/// `k` skips leaves a uniform displacement of `g + 5 - k`.
#[test]
fn shared_shift_on_the_naturals() {
    let spec = LatticeSpec::naturals(1.0);
    let config = DetectorConfig {
        k_max: 10,
        tau: 0.5,
        edge_margin: 12,
    };
    let process = Process::new(
        Window::new(spec, 80).unwrap(),
        NoiseModel::Shared { variance: 1.0 },
    )
    .unwrap();
    let deletion = Deletion::Sites {
        sites: (1..=5).map(|z| vec![z]).collect(),
    };
    for t in 0..50 {
        let (obs, truth) = process
            .simulate(
                &deletion,
                &CutRule::default_for(config.edge_margin),
                derive_seed(3, t),
            )
            .unwrap();
        let g = truth.noise()[0];
        let profile = detector_profile(&process.window, &config, &obs).unwrap();
        for k in 0..=10 {
            let expected = (g + 5.0 - k as f64).abs();
            let got = profile.d[k].unwrap();
            assert!((got - expected).abs() <= 1e-9, "g={g} k={k} got={got}");
        }
    }
}

#[test]
fn iid_detector_counts_deletions() {
    let spec = LatticeSpec::new(2, Norm::Linf, 1.5);
    let config = DetectorConfig {
        k_max: 4,
        tau: 0.5,
        edge_margin: 3,
    };
    let process = Process::new(
        Window::new(spec, 80).unwrap(),
        NoiseModel::Iid { variance: 1.0 },
    )
    .unwrap();
    for count in [0usize, 1, 3] {
        let deletion = Deletion::Random {
            count,
            max_shell: 40,
        };
        let mut hits = 0;
        for t in 0..20 {
            let (obs, _) = process
                .simulate(
                    &deletion,
                    &CutRule::default_for(config.edge_margin),
                    derive_seed(11, t),
                )
                .unwrap();
            if detector_profile(&process.window, &config, &obs)
                .unwrap()
                .k_hat
                == Some(count)
            {
                hits += 1;
            }
        }
        assert!(hits >= 18, "|S| = {count}: {hits}/20");
    }
}

#[test]
fn two_sided_profile_combines_both_sides() {
    let spec = LatticeSpec::two_sided(2.0, 2.0);
    let config = DetectorConfig {
        k_max: 2,
        tau: 0.5,
        edge_margin: 3,
    };
    let process = Process::new(
        Window::new(spec, 60).unwrap(),
        NoiseModel::Iid { variance: 1.0 },
    )
    .unwrap();
    let deletion = Deletion::Sites {
        sites: vec![vec![5]],
    };
    let (obs, _) = process
        .simulate(&deletion, &CutRule::default_for(3), 1)
        .unwrap();
    let p = two_sided_profile(&process.window, &config, &obs).unwrap();
    assert!(p.d[0].unwrap() >= 0.5);
    assert_eq!(p.k_hat, Some(1));
    let (_, m) = truncated_fk(&process.window, &config, &obs, 1).unwrap();
    assert_eq!(
        m.skipped_interior,
        process.window.site_ids(&[vec![5]]).unwrap()
    );
    // the negative side keeps its own points
    let below = obs.points.iter().filter(|&&x| x < -0.5).count();
    assert!(m.negative_points.abs_diff(below) <= 1);
}

#[test]
fn truncated_fk_errors() {
    let spec = LatticeSpec::new(1, Norm::L1, 2.0);
    let process = Process::new(Window::new(spec, 20).unwrap(), NoiseModel::Zero).unwrap();
    let (obs, _) = process
        .simulate(&Deletion::None, &CutRule::default_for(2), 0)
        .unwrap();
    let config = DetectorConfig::default();
    assert!(matches!(
        truncated_fk(&process.window, &config, &obs, 9),
        Err(Error::KExceedsMax { .. })
    ));
    let (v, m) = truncated_fk(&process.window, &config, &obs, 0).unwrap();
    assert_eq!(v, 0.0);
    assert!(m.skipped_interior.is_empty());
    assert!(m.per_shell_stat.iter().all(|&x| x == 0.0));
    let bad = DetectorConfig {
        edge_margin: 20,
        ..config
    };
    assert!(detector_profile(&process.window, &bad, &obs).is_err());
}

#[test]
fn detector_never_reads_ground_truth() {
    let spec = LatticeSpec::new(2, Norm::Linf, 1.5);
    let process = Process::new(
        Window::new(spec, 30).unwrap(),
        NoiseModel::Iid { variance: 1.0 },
    )
    .unwrap();
    let deletion = Deletion::Random {
        count: 2,
        max_shell: 10,
    };
    let (obs, truth) = process
        .simulate(&deletion, &CutRule::default_for(2), 5)
        .unwrap();
    let config = DetectorConfig::default();
    detector_profile(&process.window, &config, &obs).unwrap();
    truncated_fk(&process.window, &config, &obs, 1).unwrap();
    assert_eq!(truth.access_count(), 0);
}

#[test]
fn wrong_guess_produces_chains() {
    // delete one site but force the detector to explain the data with none
    let spec = LatticeSpec::new(1, Norm::L1, 2.0);
    let process = Process::new(
        Window::new(spec, 30).unwrap(),
        NoiseModel::Iid { variance: 0.01 },
    )
    .unwrap();
    let deletion = Deletion::Sites {
        sites: vec![vec![4]],
    };
    let config = DetectorConfig::default();
    let (obs, truth) = process
        .simulate(&deletion, &CutRule::default_for(2), 8)
        .unwrap();
    let (_, m) = truncated_fk(&process.window, &config, &obs, 0).unwrap();
    let chains = chains_for_match(&process.window, &m, &truth);
    assert_eq!(chains.len(), 1);
    assert_eq!(chains[0].sites[0], truth.deleted()[0]);
    assert!(!chains[0].monotone.is_empty());
}
