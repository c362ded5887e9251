mod common;

use common::params;
use echoed_walks::stats::{chi_square, ks_one_sample, ks_two_sample, mean_and_se};
use echoed_walks::urn::{composite_sample, direct_sample, exact_total, polya_sample, y_pmf, y_pmf_exact};
use echoed_walks::{RandomTape, Slot};
use num_traits::One;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn urn_ball_count(n in 1u64..500, seed in any::<u64>()) {
        let s = polya_sample(n, &RandomTape::new(seed, 0));
        prop_assert_eq!(s.red + s.blue, n + 1);
        prop_assert!(s.red >= 1 && s.blue >= 1);
        prop_assert_eq!(s.step, n);
    }

    #[test]
    fn y_pmf_normalised_with_mean_n_over_r(n in 2u64..3000, frac in 0.0f64..1.0) {
        let r = 2 + ((n - 2) as f64 * frac) as u64;
        let law = y_pmf(n, r).unwrap();
        prop_assert_eq!(law.pmf.len() as u64, n - r + 1);
        let total: f64 = law.pmf.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12, "sum {}", total);
        let mean: f64 = law.pmf.iter().enumerate().map(|(i, q)| (i + 1) as f64 * q).sum();
        let want = n as f64 / r as f64;
        prop_assert!((mean - want).abs() <= 1e-9 * want, "{} vs {}", mean, want);
    }

    #[test]
    fn y_pmf_exact_sums_to_one(n in 2u64..=60, frac in 0.0f64..1.0) {
        let r = 2 + ((n - 2) as f64 * frac) as u64;
        let pmf = y_pmf_exact(n, r).unwrap();
        prop_assert!(exact_total(&pmf).is_one());
    }
}

#[test]
fn urn_small_cases() {
    let one = polya_sample(1, &RandomTape::new(0, 0));
    assert_eq!((one.red, one.blue), (1, 1));
    let reps = 100_000u64;
    let reds: Vec<f64> = (0..reps).map(|i| polya_sample(2, &RandomTape::new(31, i)).red as f64).collect();
    let m = mean_and_se(&reds);
    assert!(m.z(1.5) <= 4.0, "P(red = 2) off: {m:?}");
}

#[test]
fn red_count_is_uniform() {
    let n = 20u64;
    let reps = 100_000u64;
    let mut counts = vec![0u64; n as usize];
    let mut reds = Vec::with_capacity(reps as usize);
    for i in 0..reps {
        let r = polya_sample(n, &RandomTape::new(32, i)).red;
        counts[r as usize - 1] += 1;
        reds.push(r as f64);
    }
    let chi = chi_square(&counts, &vec![1.0 / n as f64; n as usize]);
    assert!(chi.p_value > 0.01, "chi-square {} (p = {})", chi.statistic, chi.p_value);
    let m = mean_and_se(&reds);
    assert!(m.z((n + 1) as f64 / 2.0) <= 4.0, "{m:?}");
}

#[test]
fn y_pmf_examples() {
    for n in [2u64, 5, 100] {
        assert_eq!(y_pmf(n, n).unwrap().pmf, vec![1.0]);
    }
    let l = y_pmf(3, 2).unwrap();
    assert!((l.pmf[0] - 0.5).abs() < 1e-15 && (l.pmf[1] - 0.5).abs() < 1e-15);
}

#[test]
fn second_subtree_fraction_is_uniform() {
    let n = 10_000u64;
    let law = y_pmf(n, 2).unwrap();
    let mut rng = RandomTape::new(33, 0).rng(Slot::Aux);
    let xs: Vec<f64> = (0..100_000).map(|_| law.sample(&mut rng) as f64 / n as f64).collect();
    let d = ks_one_sample(&xs, |x| x.clamp(0.0, 1.0));
    assert!(d < 0.02, "KS distance {d}");
}

#[test]
fn composite_trivial_cases() {
    let unit = params(1.0, "const:1", "const:1");
    let xs = composite_sample(&unit, 30, 50, &RandomTape::new(34, 0)).unwrap();
    assert!(xs.iter().all(|&x| x == 31.0));
    // n = 1: 1 + ξ
    let bern = params(1.0, "bernoulli:0.5", "const:1");
    let xs = composite_sample(&bern, 1, 20_000, &RandomTape::new(34, 1)).unwrap();
    assert!(xs.iter().all(|&x| x == 1.0 || x == 2.0));
    let m = mean_and_se(&xs);
    assert!(m.z(1.5) <= 4.0);
    assert!(composite_sample(&params(0.5, "const:1", "const:1"), 4, 10, &RandomTape::new(0, 0)).is_err());
    assert!(composite_sample(&params(1.0, "const:1", "const:2"), 4, 10, &RandomTape::new(0, 0)).is_err());
}

#[test]
fn composite_matches_direct() {
    let n_samples = 100_000;
    let bern = params(1.0, "bernoulli:0.5", "const:1");
    let a = composite_sample(&bern, 64, n_samples, &RandomTape::new(35, 0)).unwrap();
    let b = direct_sample(&bern, 64, n_samples, &RandomTape::new(35, 1));
    let d = ks_two_sample(&a, &b, 0.05).unwrap().statistic;
    let limit = 1.36 * (2.0 / n_samples as f64).sqrt();
    assert!(d < limit, "D = {d} (limit {limit})");
}

#[test]
fn composite_grid() {
    let n_samples = 20_000;
    for (i, echo) in ["bernoulli:0.5", "const:2", "exp:1"].iter().enumerate() {
        for &n in &[8u64, 64] {
            let pr = params(1.0, echo, "const:1");
            let t = RandomTape::new(36, 2 * i as u64 + u64::from(n == 64));
            let a = composite_sample(&pr, n, n_samples, &t.child(0)).unwrap();
            let b = direct_sample(&pr, n, n_samples, &t.child(1));
            let ks = ks_two_sample(&a, &b, 0.01).unwrap();
            assert!(!ks.reject, "{echo} n={n}: D = {} (threshold {})", ks.statistic, ks.threshold);
        }
    }
}
