mod common;

use common::{law, params, walk_params};
use echoed_walks::analytic::{
    asymptotic_mean_constant, atom_factorization_check, component_limit_mean, expected_moment_sum, gamma_sum,
    l_moments, limit_mean, ml_moment,
};
use echoed_walks::special::{gamma, ln_gamma, ln_gamma_ratio};
use echoed_walks::{EchoLaw, Error};
use proptest::prelude::*;

fn direct_gamma_sum(m: u64, n: u64, a: f64, b: f64) -> f64 {
    (m..=n).map(|i| (ln_gamma(i as f64 + a) - ln_gamma(i as f64 + 1.0 + b)).exp()).sum()
}

/// Σ_{k≤n} E|X̃_k|^q from E|X̃_{k+1}|^q = (1−p) E|X|^q + (p m_q / k) Σ_{i≤k} E|X̃_i|^q.
fn moment_recursion(p: f64, mq: f64, base: f64, n: u64) -> f64 {
    let mut s = base;
    for k in 1..n {
        s += (1.0 - p) * base + p * mq * s / k as f64;
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn gamma_sum_matches_direct(m in 1u64..30, len in 0u64..200, a in -0.5f64..3.0, gap in 0.05f64..2.0, flip in any::<bool>()) {
        let b = if flip { a + gap } else { (a - gap).max(-0.9) };
        prop_assume!((a - b).abs() > 0.01);
        let n = m + len;
        let closed = gamma_sum(m, n, a, b).unwrap();
        let direct = direct_gamma_sum(m, n, a, b);
        prop_assert!((closed - direct).abs() <= 1e-12 * direct.abs(), "{} vs {}", closed, direct);
    }

    #[test]
    fn moment_sum_matches_recursion(pr in walk_params(), q in 0.5f64..3.0, n in 1u64..3000) {
        let mq = pr.echo.moment(q).unwrap();
        prop_assume!((pr.p * mq - 1.0).abs() > 1e-3);
        let closed = expected_moment_sum(&pr, q, n).unwrap();
        let rec = moment_recursion(pr.p, mq, pr.spin.abs_moment(q).unwrap(), n);
        prop_assert!((closed - rec).abs() <= 1e-10 * rec.abs(), "{} vs {}", closed, rec);
    }

    #[test]
    fn atom_factorisation_holds(q in 0.2f64..0.95, v in 0.3f64..1.5, k in 1usize..4) {
        // ξ ∈ {0, v}; the moment condition m_j < j m_1 reads v^{j−1} < j
        let l = EchoLaw::Discrete(vec![(0.0, 1.0 - q), (v, q)]);
        prop_assume!((2..=k).all(|j| v.powi(j as i32 - 1) < j as f64 - 1e-9));
        let (lhs, rhs) = atom_factorization_check(&l, k).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs(), "{} vs {}", lhs, rhs);
    }
}

#[test]
fn gamma_sum_examples() {
    assert!((gamma_sum(1, 1, 0.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
    let direct = direct_gamma_sum(1, 50, 0.3, 0.9);
    assert!((gamma_sum(1, 50, 0.3, 0.9).unwrap() - direct).abs() <= 1e-12 * direct);
    let single = gamma(7.0 + 0.4) / gamma(8.0 + 1.1);
    assert!((gamma_sum(7, 7, 0.4, 1.1).unwrap() - single).abs() <= 1e-13 * single);
    assert!(matches!(gamma_sum(1, 5, 0.5, 0.5), Err(Error::EqualParameters(_))));
}

#[test]
fn ratio_asymptotics() {
    let n = 1e6;
    for (a, b) in [(0.3, 0.9), (1.6, 0.0)] {
        let r = ln_gamma_ratio(n, a, b).exp() * n.powf(b - a);
        assert!((r - 1.0).abs() < 1e-5, "({a}, {b}): {r}");
    }
}

#[test]
fn moment_sum_examples() {
    let pr = params(1.0, "const:2", "const:1");
    assert!((expected_moment_sum(&pr, 1.0, 3).unwrap() - 6.0).abs() < 1e-12);
    assert!((expected_moment_sum(&pr, 1.0, 4).unwrap() - 10.0).abs() < 1e-12);
    // p m_q = 1 with p = 1/2 and m_1 = 2
    let crit = params(0.5, "const:2", "normal:0,1");
    let e_abs = (2.0 / std::f64::consts::PI).sqrt();
    for n in [1u64, 7, 100, 9_999, 10_000, 10_001, 250_000] {
        let h: f64 = (1..=n).map(|j| 1.0 / j as f64).sum();
        let want = n as f64 * e_abs * (0.5 + 0.5 * h);
        let got = expected_moment_sum(&crit, 1.0, n).unwrap();
        assert!((got - want).abs() <= 1e-12 * want, "n={n}: {got} vs {want}");
        if n <= 10_001 {
            let rec = moment_recursion(0.5, 2.0, e_abs, n);
            assert!((got - rec).abs() <= 1e-10 * rec);
        }
    }
    let unit = params(1.0, "const:1", "exp:2");
    assert!((expected_moment_sum(&unit, 2.0, 40).unwrap() - 40.0 * 0.5).abs() < 1e-12);
}

#[test]
fn asymptotic_constant_examples() {
    let sup = asymptotic_mean_constant(&params(0.8, "const:2", "const:1")).unwrap();
    let want = (1.0 + 0.2 / 0.6) / gamma(2.6);
    assert!((sup.exponent - 1.6).abs() < 1e-15 && !sup.log_correction);
    assert!((sup.constant - want).abs() < 1e-12 && (want - 0.9327).abs() < 1e-4);
    let sub = asymptotic_mean_constant(&params(0.5, "const:1", "const:1")).unwrap();
    assert_eq!((sub.exponent, sub.constant, sub.log_correction), (1.0, 1.0, false));
    let crit = asymptotic_mean_constant(&params(0.5, "const:2", "const:1")).unwrap();
    assert_eq!((crit.exponent, crit.constant, crit.log_correction), (1.0, 0.5, true));
}

#[test]
fn limit_mean_examples() {
    let half = limit_mean(&params(1.0, "const:2", "const:1")).unwrap();
    assert!((half.value - 0.5).abs() < 1e-14 && !half.degenerate);
    let dead = limit_mean(&params(1.0, "const:3", "const:1")).unwrap();
    assert!(dead.degenerate && dead.value == 0.0);
    let pr = params(0.8, "const:2", "const:1");
    let r2 = component_limit_mean(&pr, 2).unwrap().value;
    assert!((r2 - 0.2 / gamma(3.6)).abs() < 1e-14);
}

#[test]
fn l_moment_examples() {
    let b = l_moments(&law("bernoulli:0.5"), 2).unwrap();
    assert!((b[0] - 1.0 / gamma(1.5)).abs() < 1e-14);
    assert!((b[1] - 2.0).abs() < 1e-12);
    for q in [0.2, 0.7, 0.9] {
        let m = l_moments(&EchoLaw::Bernoulli(q), 3).unwrap();
        for (k, v) in m.iter().enumerate() {
            let k = (k + 1) as f64;
            let want = gamma(1.0 + k) / gamma(1.0 + q * k);
            assert!((v - want).abs() <= 1e-11 * want, "q={q} k={k}: {v} vs {want}");
        }
    }
    assert!(l_moments(&law("const:1"), 6).unwrap().iter().all(|&v| (v - 1.0).abs() < 1e-12));
    assert!(matches!(l_moments(&law("const:3"), 2), Err(Error::MomentCondition { .. })));
}

#[test]
fn ml_moment_examples() {
    assert!((ml_moment(0.3, 0.0).unwrap() - 1.0).abs() < 1e-15);
    assert!((ml_moment(0.5, 2.0).unwrap() - 2.0).abs() < 1e-13);
    assert!((ml_moment(1.0 - 1e-12, 3.7).unwrap() - 1.0).abs() < 1e-9);
    let (lhs, rhs) = atom_factorization_check(&law("bernoulli:0.5"), 2).unwrap();
    assert!((lhs - 2.0).abs() < 1e-12 && (rhs - 2.0).abs() < 1e-12);
}
