//! Shared strategies and helpers for the integration tests.
#![allow(dead_code)]

use echoed_walks::{EchoLaw, SpinLaw, WalkParams};
use proptest::prelude::*;

pub fn law(s: &str) -> EchoLaw {
    s.parse().unwrap()
}

pub fn spin(s: &str) -> SpinLaw {
    s.parse().unwrap()
}

pub fn params(p: f64, echo: &str, sp: &str) -> WalkParams {
    WalkParams::new(p, law(echo), spin(sp)).unwrap()
}

/// Echo laws whose moments are finite for every positive order.
pub fn echo_law() -> impl Strategy<Value = EchoLaw> {
    prop_oneof![
        (0.1f64..3.0).prop_map(EchoLaw::Constant),
        (0.05f64..1.0).prop_map(EchoLaw::Bernoulli),
        (0.0f64..2.0, 0.1f64..3.0, 0.05f64..0.95)
            .prop_map(|(a, b, w)| EchoLaw::Discrete(vec![(a, w), (a + b, 1.0 - w)])),
        (0.3f64..3.0).prop_map(EchoLaw::Exponential),
        (-0.5f64..0.5, 0.05f64..0.8).prop_map(|(mu, sigma)| EchoLaw::LogNormal { mu, sigma }),
        (0.0f64..1.5, 0.1f64..2.0).prop_map(|(a, w)| EchoLaw::Uniform { a, b: a + w }),
    ]
}

/// Spin laws with every absolute moment finite.
pub fn spin_law() -> impl Strategy<Value = SpinLaw> {
    prop_oneof![
        (0.2f64..2.0).prop_map(SpinLaw::Constant),
        Just(SpinLaw::Rademacher),
        (-1.0f64..1.0, 0.1f64..2.0).prop_map(|(mu, sigma)| SpinLaw::Normal { mu, sigma }),
        (0.5f64..2.0).prop_map(SpinLaw::Exponential),
    ]
}

pub fn walk_params() -> impl Strategy<Value = WalkParams> {
    (0.05f64..=1.0, echo_law(), spin_law()).prop_map(|(p, e, s)| WalkParams::new(p, e, s).unwrap())
}

pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let m = echoed_walks::stats::mean_and_se(xs);
    (m.mean, m.se)
}
