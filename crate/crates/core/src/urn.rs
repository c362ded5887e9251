//! Two-colour Pólya urn, the subtree-size law Y(n, r) of a uniform random
//! recursive tree, and the urn decomposition of a pure-echo walk with unit
//! spins.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::laws::{SpinLaw, WalkParams};
use crate::tape::{RandomTape, Slot};
use crate::walk::simulate;

/// Urn contents after n − 1 draws from one red and one blue ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UrnState {
    pub red: u64,
    pub blue: u64,
    pub step: u64,
}

/// Run the urn for n − 1 draws using the given generator.
pub fn polya_run<R: Rng + ?Sized>(n: u64, rng: &mut R) -> UrnState {
    assert!(n >= 1, "urn starts at step 1");
    let (mut red, mut blue) = (1u64, 1u64);
    for _ in 1..n {
        // draw red with probability red / (red + blue)
        if rng.random_range(0..red + blue) < red {
            red += 1;
        } else {
            blue += 1;
        }
    }
    UrnState { red, blue, step: n }
}

pub fn polya_sample(n: u64, tape: &RandomTape) -> UrnState {
    polya_run(n, &mut tape.rng(Slot::Urn))
}

/// Law of Y(n, r), the size at time n of the subtree rooted at vertex r.
#[derive(Debug, Clone, PartialEq)]
pub struct SubtreeSizeLaw {
    pub n: u64,
    pub r: u64,
    /// pmf[i − 1] = P(Y = i) for i = 1..=n−r+1.
    pub pmf: Vec<f64>,
    cdf: Vec<f64>,
}

impl SubtreeSizeLaw {
    pub fn support_max(&self) -> u64 {
        self.n - self.r + 1
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum()
    }

    /// Inverse-CDF draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u = rng.random::<f64>() * self.cdf[self.cdf.len() - 1];
        let idx = self.cdf.partition_point(|&c| c <= u);
        idx.min(self.pmf.len() - 1) as u64 + 1
    }
}

fn check_indices(n: u64, r: u64) -> Result<()> {
    if r < 2 || r > n {
        return Err(Error::BadIndices {
            n: n as usize,
            r: r as usize,
        });
    }
    Ok(())
}

/// P(Y(n,r) = i) = (r−1) (n−r)!/(n−1)! · (n−i−1)!/(n−r+1−i)!.
///
/// Built from P(Y = 1) = (r−1)/(n−1) and the ratio
/// P(Y = i+1)/P(Y = i) = (n−r+1−i)/(n−i−1), which keeps the total within a
/// few ulps of 1 where log-factorials of large n would not.
pub fn y_pmf(n: u64, r: u64) -> Result<SubtreeSizeLaw> {
    check_indices(n, r)?;
    let len = (n - r + 1) as usize;
    let mut pmf = Vec::with_capacity(len);
    let mut q = (r - 1) as f64 / (n - 1) as f64;
    for i in 1..=len as u64 {
        pmf.push(q);
        if i < len as u64 {
            q *= (n - r + 1 - i) as f64 / (n - i - 1) as f64;
        }
    }
    let mut cdf = Vec::with_capacity(pmf.len());
    let mut acc = 0.0;
    for p in &pmf {
        acc += p;
        cdf.push(acc);
    }
    Ok(SubtreeSizeLaw { n, r, pmf, cdf })
}

fn factorial(k: u64) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, j| acc * BigInt::from(j))
}

/// Exact rational pmf of Y(n, r); pmf[i − 1] = P(Y = i).
pub fn y_pmf_exact(n: u64, r: u64) -> Result<Vec<BigRational>> {
    check_indices(n, r)?;
    let head = BigRational::new(
        BigInt::from(r - 1) * factorial(n - r),
        factorial(n - 1),
    );
    Ok((1..=n - r + 1)
        .map(|i| head.clone() * BigRational::new(factorial(n - i - 1), factorial(n - r + 1 - i)))
        .collect())
}

/// Sum of an exact pmf; equals one exactly for a valid law.
pub fn exact_total(pmf: &[BigRational]) -> BigRational {
    pmf.iter().fold(BigRational::zero(), |acc, p| acc + p)
}

/// β ~ Beta(1, r − 1), the limit of Y(n, r)/n.
pub fn beta_limit_sample<R: Rng + ?Sized>(r: u64, rng: &mut R) -> f64 {
    assert!(r >= 2, "Beta(1, r-1) needs r >= 2");
    let u: f64 = rng.random();
    // 1 − U^{1/(r−1)} without cancellation for large r
    -(u.ln() / (r - 1) as f64).exp_m1()
}

/// N draws of Ŝ_{R_n} + ξ Š_{B_n}, where (R_n, B_n) is the urn after n − 1
/// draws and Ŝ, Š are independent copies of the walk.
///
/// Requires the pure-echo case with unit spins; the result is then
/// distributed as S̃_{n+1}.
pub fn composite_sample(params: &WalkParams, n: u64, count: usize, tape: &RandomTape) -> Result<Vec<f64>> {
    if params.p != 1.0 || params.spin != SpinLaw::Constant(1.0) {
        return Err(Error::HypothesisViolation(
            "the urn decomposition needs p = 1 and X = 1".into(),
        ));
    }
    if n < 1 {
        return Err(Error::InvalidParameter("urn step must be >= 1".into()));
    }
    let hat = tape.derive("composite-hat");
    let check = tape.derive("composite-check");
    let urn = tape.derive("composite-urn");
    Ok((0..count as u64)
        .into_par_iter()
        .map(|j| {
            let u = urn.child(j);
            let state = polya_sample(n, &u);
            let xi = params.echo.sample(&mut u.rng(Slot::Aux));
            let a = simulate(params, state.red as usize, &hat.child(j));
            let b = simulate(params, state.blue as usize, &check.child(j));
            a.position(state.red as usize) + xi * b.position(state.blue as usize)
        })
        .collect())
}

/// N draws of S̃_{n+1} by direct simulation, for comparison with
/// [`composite_sample`].
pub fn direct_sample(params: &WalkParams, n: u64, count: usize, tape: &RandomTape) -> Vec<f64> {
    let root = tape.derive("composite-direct");
    (0..count as u64)
        .into_par_iter()
        .map(|j| simulate(params, n as usize + 1, &root.child(j)).position(n as usize + 1))
        .collect()
}
