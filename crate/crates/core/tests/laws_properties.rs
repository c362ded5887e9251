mod common;

use common::{echo_law, law, spin_law, walk_params};
use echoed_walks::laws::{classify, phi, phi_minimizer};
use echoed_walks::{EchoLaw, Regime, WalkParams};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phi_three_point_convexity(l in echo_law(), r1 in 0.1f64..4.0, d1 in 0.05f64..3.0, d2 in 0.05f64..3.0) {
        let (r2, r3) = (r1 + d1, r1 + d1 + d2);
        let (f1, f2, f3) = (phi(&l, 1.0, r1).unwrap(), phi(&l, 1.0, r2).unwrap(), phi(&l, 1.0, r3).unwrap());
        let chord = f1 * (r3 - r2) / (r3 - r1) + f3 * (r2 - r1) / (r3 - r1);
        prop_assert!(f2 <= chord * (1.0 + 1e-12), "{l}: φ({r2}) = {f2} above chord {chord}");
    }

    #[test]
    fn ui_iff_lambda_nonempty(pr in walk_params()) {
        let rep = classify(&pr).unwrap();
        prop_assert_eq!(rep.ui_holds, rep.lambda_nonempty);
    }

    #[test]
    fn ui_iff_minimizer_beyond_one(l in echo_law(), s in spin_law()) {
        let m1 = l.mean();
        let gap = l.xi_log_xi().unwrap() - m1;
        // φ_1 is convex with φ_1(1) = m_1 and slope E[ξ log ξ] − m_1 there
        prop_assume!(gap.abs() > 1e-6 * m1.max(1.0));
        let rep = classify(&WalkParams::new(1.0, l.clone(), s).unwrap()).unwrap();
        let r = phi_minimizer(&l, 1.0).unwrap();
        prop_assert_eq!(rep.ui_holds, r > 1.0, "{} minimizer {}", l, r);
        if rep.ui_holds && r.is_finite() {
            prop_assert!(phi(&l, 1.0, r).unwrap() < m1);
        }
    }

    #[test]
    fn regime_depends_only_on_pm1(pr in walk_params(), c in 0.2f64..1.0) {
        // (p, ξ) and (p c', ξ / c') share p m_1; c' ranges over (0, 1/p]
        let c = c / pr.p;
        let pm = pr.pm1();
        prop_assume!((pm - 1.0).abs() > 1e-9);
        let other = WalkParams::new(pr.p * c, pr.echo.clone().scaled(1.0 / c).unwrap(), pr.spin.clone()).unwrap();
        prop_assert!((other.pm1() - pm).abs() <= 1e-12 * pm.max(1.0));
        let (a, b) = (classify(&pr).unwrap(), classify(&other).unwrap());
        prop_assert_eq!(a.regime, b.regime);
        prop_assert_eq!(a.regime, Regime::of(pm));
        prop_assert!((a.scaling_exponent - b.scaling_exponent).abs() <= 1e-12 * pm.max(1.0));
    }

    #[test]
    fn grammar_round_trip(l in echo_law(), s in spin_law()) {
        let back: EchoLaw = l.to_string().parse().unwrap();
        prop_assert_eq!(back, l);
        let back: echoed_walks::SpinLaw = s.to_string().parse().unwrap();
        prop_assert_eq!(back, s);
    }
}

#[test]
fn classify_examples() {
    let two = classify(&WalkParams::new(1.0, law("const:2"), "const:1".parse().unwrap()).unwrap()).unwrap();
    assert_eq!(two.regime, Regime::Supercritical);
    assert_eq!(two.pm1, 2.0);
    assert!(two.ui_holds);
    let three = classify(&WalkParams::new(1.0, law("const:3"), "const:1".parse().unwrap()).unwrap()).unwrap();
    assert!(!three.ui_holds);
    let half = classify(&common::params(0.5, "const:1", "const:1")).unwrap();
    assert_eq!(half.regime, Regime::Subcritical);
    assert!((half.limit_constant - 1.0).abs() < 1e-15);
}

#[test]
fn minimizer_examples() {
    assert!((phi_minimizer(&law("exp:1"), 1.0).unwrap() - 1.4616).abs() < 1e-4);
    let oracle = 1.0 / std::f64::consts::LN_2;
    assert!((phi_minimizer(&law("const:2"), 1.0).unwrap() - oracle).abs() < 1e-7 * oracle);
    assert_eq!(phi_minimizer(&law("const:1"), 1.0).unwrap(), f64::INFINITY);
}

#[test]
fn negative_support_rejected() {
    for s in ["const:-1", "uniform:-1,2", "discrete:-0.5@0.5,1@0.5", "bernoulli:0"] {
        assert!(s.parse::<EchoLaw>().map(|l| l.validate()).map_or(true, |v| v.is_err()), "{s}");
    }
}
