use proptest::prelude::*;

use rigidity_core::lattice::{
    enumerate_shells, enumerate_sites, integer_power_sums, LatticeSpec, Norm, PowerSums, Window,
};

#[test]
fn four_squares_cover_every_integer() {
    let (s, _) = integer_power_sums(4, 2, 10_001).unwrap();
    assert!(s.iter().enumerate().all(|(n, &v)| v == n as u64));
}

#[test]
fn sums_of_two_squares_start() {
    let (s, _) = integer_power_sums(2, 2, 10).unwrap();
    assert_eq!(s, vec![0, 1, 2, 4, 5, 8, 9, 10, 13, 16]);
}

/// An integer is a sum of two squares iff every prime `3 mod 4` divides it
/// to an even power.
fn two_squares(mut n: u64) -> bool {
    if n == 0 {
        return true;
    }
    let mut p = 2;
    while p * p <= n {
        let mut e = 0;
        while n.is_multiple_of(p) {
            n /= p;
            e += 1;
        }
        if p % 4 == 3 && e % 2 == 1 {
            return false;
        }
        p += 1;
    }
    n % 4 != 3
}

#[test]
fn two_square_sieve_matches_fermat() {
    let (s, _) = integer_power_sums(2, 2, 2000).unwrap();
    let expected: Vec<u64> = (0..).filter(|&n| two_squares(n)).take(2000).collect();
    assert_eq!(s, expected);
}

#[test]
fn lp_table_values_are_powers_of_sums() {
    let spec = LatticeSpec::new(3, Norm::Lp { p: 2.0 }, 3.0);
    let t = enumerate_shells(&spec, 50).unwrap();
    let Some(PowerSums::Exact(s)) = &t.power_sums else {
        panic!("integer p gives exact sums")
    };
    for (v, &sn) in t.values.iter().zip(s) {
        assert!((v - (sn as f64).powf(1.5)).abs() <= 1e-12 * v.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn sites_agree_with_shell_table(d in 1usize..=3, linf in any::<bool>(), alpha in 0.3f64..3.0, n in 1usize..12) {
        let norm = if linf { Norm::Linf } else { Norm::L1 };
        let spec = LatticeSpec::new(d, norm, alpha);
        let sites = enumerate_sites(&spec, n).unwrap();
        let table = enumerate_shells(&spec, n).unwrap();
        prop_assert_eq!(sites.len() as u64, table.cumulative[n]);
        prop_assert!(sites.values.windows(2).all(|w| w[0] <= w[1]));
        for i in 0..sites.len() {
            prop_assert_eq!(sites.values[i], table.values[sites.shells[i] as usize]);
        }
    }

    #[test]
    fn window_inner_shell(n in 2usize..40, em in 1usize..50) {
        let w = Window::new(LatticeSpec::naturals(1.0), n).unwrap();
        prop_assert_eq!(w.inner_shell(em).is_ok(), em < n);
    }
}
