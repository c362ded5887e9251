//! Adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Used for moments that have no convenient closed form (absolute moments of
//! a shifted normal) and as an independent oracle for the closed forms in
//! [`crate::laws`].

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut stack = vec![(a, b, tol, 0u32)];
    let mut total = 0.0;
    while let Some((lo, hi, eps, depth)) = stack.pop() {
        let (val, err) = gk15(&f, lo, hi);
        if !val.is_finite() {
            return Err(Error::DivergentIntegral(format!(
                "non-finite integrand on [{lo}, {hi}]"
            )));
        }
        if err <= eps.max(1e-15 * val.abs()) || depth >= 60 {
            if depth >= 60 && err > tol {
                return Err(Error::DivergentIntegral(format!(
                    "no convergence near [{lo}, {hi}] (err {err:e})"
                )));
            }
            total += val;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, 0.5 * eps, depth + 1));
            stack.push((mid, hi, 0.5 * eps, depth + 1));
        }
    }
    Ok(total)
}

/// Integrate over `[a, +inf)` via the map `x = a + t / (1 - t)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> Result<f64> {
    integrate(
        |t: f64| {
            if t >= 1.0 {
                return 0.0;
            }
            let s = 1.0 - t;
            let v = f(a + t / s) / (s * s);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(|x| x * x * x - 2.0 * x, 0.0, 3.0, 1e-12).unwrap();
        assert!((v - (81.0 / 4.0 - 9.0)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_tail() {
        let v = integrate_to_infinity(|x| (-x * x / 2.0).exp(), 0.0, 1e-12).unwrap();
        assert!((v - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn log_singularity() {
        // ∫_0^1 log x dx = -1
        let v = integrate(|x: f64| if x > 0.0 { x.ln() } else { 0.0 }, 0.0, 1.0, 1e-11).unwrap();
        assert!((v + 1.0).abs() < 1e-9);
    }
}
