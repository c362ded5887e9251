//! Summary statistics and the goodness-of-fit tests used by the checks.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl MeanSe {
    /// |mean − target| in standard errors.
    pub fn z(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.se
        }
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (two-pass).
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn mean_and_se(xs: &[f64]) -> MeanSe {
    MeanSe {
        mean: mean(xs),
        se: (variance(xs) / xs.len() as f64).sqrt(),
        n: xs.len(),
    }
}

/// Quantile of sorted data by linear interpolation between order statistics
/// (the "type 7" rule).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn quantile(xs: &[f64], q: f64) -> f64 {
    quantile_sorted(&sorted(xs), q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub threshold: f64,
    pub alpha: f64,
    pub reject: bool,
}

/// Asymptotic Kolmogorov-Smirnov constant c(α) = sqrt(−ln(α/2)/2).
pub fn ks_constant(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

pub const KS_MIN_SAMPLES: usize = 100;

/// Two-sample Kolmogorov-Smirnov test at level α.
pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: f64) -> Result<KsResult> {
    let got = a.len().min(b.len());
    if got < KS_MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            min: KS_MIN_SAMPLES,
            got,
        });
    }
    let (sa, sb) = (sorted(a), sorted(b));
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < sa.len() && j < sb.len() {
        // step past every copy of the smallest remaining value on both sides
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let threshold = ks_constant(alpha) * ((na + nb) / (na * nb)).sqrt();
    Ok(KsResult {
        statistic: d,
        threshold,
        alpha,
        reject: d > threshold,
    })
}

/// One-sample KS distance sup |F_n − F| against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let s = sorted(xs);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square of observed counts against expected probabilities.
pub fn chi_square(counts: &[u64], probs: &[f64]) -> ChiSquare {
    assert_eq!(counts.len(), probs.len());
    let total: u64 = counts.iter().sum();
    let stat: f64 = counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = p * total as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let dof = counts.len() - 1;
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    ChiSquare {
        statistic: stat,
        dof,
        p_value: 1.0 - dist.cdf(stat),
    }
}

/// Least-squares slope of y on x with its standard error.
pub fn ols_slope(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let se = if n > 2.0 { (rss / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    (slope, se, intercept)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_identical_is_zero() {
        let a: Vec<f64> = (0..500).map(|i| (i as f64 * 0.37).sin()).collect();
        let r = ks_two_sample(&a, &a, 0.01).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(!r.reject);
        assert!((ks_constant(0.01) - 1.628).abs() < 1e-3);
    }

    #[test]
    fn ks_disjoint_is_one() {
        let a: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..200).map(|i| 1000.0 + i as f64).collect();
        assert_eq!(ks_two_sample(&a, &b, 0.01).unwrap().statistic, 1.0);
    }

    #[test]
    fn ks_with_ties() {
        // two discrete samples with identical empirical laws
        let a: Vec<f64> = (0..300).map(|i| (i % 3) as f64).collect();
        let b: Vec<f64> = (0..600).map(|i| (i % 3) as f64).collect();
        assert!(ks_two_sample(&a, &b, 0.01).unwrap().statistic < 1e-12);
    }

    #[test]
    fn ks_needs_samples() {
        let a = vec![0.0; 50];
        assert_eq!(
            ks_two_sample(&a, &a, 0.01),
            Err(Error::TooFewSamples { min: 100, got: 50 })
        );
    }

    #[test]
    fn quantiles_type7() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&xs, 0.5), 2.5);
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        assert!((quantile(&xs, 0.25) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn chi_square_perfect_fit() {
        let c = chi_square(&[25, 25, 25, 25], &[0.25; 4]);
        assert_eq!(c.statistic, 0.0);
        assert!((c.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ols_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [3.0, 5.0, 7.0, 9.0];
        let (s, se, c) = ols_slope(&x, &y);
        assert!((s - 2.0).abs() < 1e-14 && se.abs() < 1e-7 && (c - 1.0).abs() < 1e-13);
    }
}
