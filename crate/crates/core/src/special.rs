//! Log-gamma helpers used throughout the analytic layer.

use statrs::function::gamma as sg;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_gamma needs a positive argument, got {x}");
    sg::ln_gamma(x)
}

pub fn gamma(x: f64) -> f64 {
    sg::gamma(x)
}

/// Below this argument the ratio is shifted up by the recurrence first.
const STIRLING_FROM: f64 = 30.0;

/// ln(Γ(x + a) / Γ(x + b)).
///
/// Differencing two log-gammas of size ~x ln x loses digits, so the Stirling
/// series is differenced term by term instead. Small arguments are first
/// moved up with Γ(z+1) = zΓ(z), collecting the exact factors in a product.
pub fn ln_gamma_ratio(x: f64, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (z1, z2) = (x + a, x + b);
    debug_assert!(z1 > 0.0 && z2 > 0.0, "ln_gamma_ratio needs positive arguments");
    let low = z1.min(z2);
    let (x, shift) = if low < STIRLING_FROM {
        let k = (STIRLING_FROM - low).ceil();
        let mut prod = 1.0;
        for j in 0..k as u64 {
            let j = j as f64;
            prod *= (z2 + j) / (z1 + j);
        }
        (x + k, prod.ln())
    } else {
        (x, 0.0)
    };
    let (z1, z2) = (x + a, x + b);
    let main = (a - b) * x.ln() + (z1 - 0.5) * (a / x).ln_1p() - (z2 - 0.5) * (b / x).ln_1p() - (a - b);
    let tail = |z: f64| {
        let w = 1.0 / (z * z);
        (1.0 / 12.0 - w * (1.0 / 360.0 - w * (1.0 / 1260.0 - w / 1680.0))) / z
    };
    main + tail(z1) - tail(z2) + shift
}

/// Γ(n + a) / Γ(n + b), evaluated through [`ln_gamma_ratio`].
pub fn gamma_ratio(n: f64, a: f64, b: f64) -> f64 {
    ln_gamma_ratio(n, a, b).exp()
}

/// Digamma function. Recurrence up to x >= 16 followed by the asymptotic series.
pub fn digamma(mut x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return f64::NAN;
    }
    if x < 0.0 {
        // reflection
        return digamma(1.0 - x) - std::f64::consts::PI / (std::f64::consts::PI * x).tan();
    }
    let mut acc = 0.0;
    while x < 16.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
    acc + x.ln() - 0.5 * inv - series
}

/// Harmonic number H_n. Exact summation below 10^4, digamma above.
pub fn harmonic(n: u64) -> f64 {
    if n < 10_000 {
        // summing small terms first keeps the rounding error at a few ulps
        (1..=n).rev().map(|j| 1.0 / j as f64).sum()
    } else {
        digamma(n as f64 + 1.0) + EULER_GAMMA
    }
}

/// ln((n-1)!) = ln Γ(n).
pub fn ln_factorial_shifted(n: u64) -> f64 {
    ln_gamma(n as f64)
}
