//! Echo laws ξ, spin laws X, the model configuration and regime
//! classification.
//!
//! Every family carries exact moments `m_γ = E ξ^γ` (in log-space), the
//! derivative `E[ξ^γ log ξ]`, an exact sampler and a string form following a
//! small grammar (`const:2`, `bernoulli:0.3`, `discrete:0.5@0.25,2@0.75`,
//! `exp:1`, `lognormal:0,0.5`, `uniform:0,2`; spins additionally accept
//! `rademacher` and `normal:0,1`).

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::analytic;
use crate::error::{Error, Result};
use crate::quad;
use crate::special::{digamma, ln_gamma};

/// Tolerance of the criticality test `p m_1 = 1`.
pub const CRITICAL_TOL: f64 = 1e-12;

/// Law of the non-negative echo multiplier ξ.
#[derive(Debug, Clone, PartialEq)]
pub enum EchoLaw {
    Constant(f64),
    /// ξ ∈ {0, 1} with P(ξ = 1) = q.
    Bernoulli(f64),
    /// Finite support: `(value, probability)` pairs.
    Discrete(Vec<(f64, f64)>),
    /// Exponential with the given rate.
    Exponential(f64),
    LogNormal { mu: f64, sigma: f64 },
    Uniform { a: f64, b: f64 },
    /// `factor * inner`.
    Scaled(Box<EchoLaw>, f64),
    /// `ε * inner` with ε ~ Bernoulli(keep) independent of inner.
    Thinned(Box<EchoLaw>, f64),
}

impl EchoLaw {
    pub fn constant(c: f64) -> Result<Self> {
        let l = EchoLaw::Constant(c);
        l.validate()?;
        Ok(l)
    }

    pub fn bernoulli(q: f64) -> Result<Self> {
        let l = EchoLaw::Bernoulli(q);
        l.validate()?;
        Ok(l)
    }

    pub fn discrete(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let l = EchoLaw::Discrete(atoms);
        l.validate()?;
        Ok(l)
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        let l = EchoLaw::Exponential(rate);
        l.validate()?;
        Ok(l)
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        let l = EchoLaw::LogNormal { mu, sigma };
        l.validate()?;
        Ok(l)
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        let l = EchoLaw::Uniform { a, b };
        l.validate()?;
        Ok(l)
    }

    pub fn scaled(self, factor: f64) -> Result<Self> {
        let l = EchoLaw::Scaled(Box::new(self), factor);
        l.validate()?;
        Ok(l)
    }

    /// The compound law εξ with ε ~ Bernoulli(keep).
    pub fn thinned(self, keep: f64) -> Result<Self> {
        if keep == 1.0 {
            return Ok(self);
        }
        let l = EchoLaw::Thinned(Box::new(self), keep);
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidLaw(m));
        match self {
            EchoLaw::Constant(c) => {
                if !c.is_finite() || *c < 0.0 {
                    return bad(format!("constant echo must be finite and >= 0, got {c}"));
                }
            }
            EchoLaw::Bernoulli(q) => {
                if !(0.0..=1.0).contains(q) {
                    return bad(format!("bernoulli parameter must lie in [0,1], got {q}"));
                }
            }
            EchoLaw::Discrete(atoms) => {
                if atoms.is_empty() {
                    return bad("discrete law needs at least one atom".into());
                }
                let mut total = 0.0;
                for &(v, w) in atoms {
                    if !v.is_finite() || v < 0.0 {
                        return bad(format!("echo support must be >= 0, got value {v}"));
                    }
                    if !(0.0..=1.0).contains(&w) {
                        return bad(format!("atom probability {w} outside [0,1]"));
                    }
                    total += w;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return bad(format!("probabilities sum to {total}, not 1"));
                }
            }
            EchoLaw::Exponential(rate) => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return bad(format!("exponential rate must be > 0, got {rate}"));
                }
            }
            EchoLaw::LogNormal { mu, sigma } => {
                if !mu.is_finite() || !(sigma.is_finite() && *sigma >= 0.0) {
                    return bad(format!("lognormal needs finite mu and sigma >= 0, got {mu}, {sigma}"));
                }
            }
            EchoLaw::Uniform { a, b } => {
                if !(a.is_finite() && b.is_finite() && *a >= 0.0 && a < b) {
                    return bad(format!("uniform echo needs 0 <= a < b, got {a}, {b}"));
                }
            }
            EchoLaw::Scaled(inner, f) => {
                inner.validate()?;
                if !(f.is_finite() && *f > 0.0) {
                    return bad(format!("scale factor must be > 0, got {f}"));
                }
            }
            EchoLaw::Thinned(inner, k) => {
                inner.validate()?;
                if !(0.0..=1.0).contains(k) {
                    return bad(format!("thinning probability must lie in [0,1], got {k}"));
                }
            }
        }
        if self.atom_at_zero() >= 1.0 {
            return Err(Error::DegenerateModel("P(xi = 0) = 1".into()));
        }
        Ok(())
    }

    /// P(ξ = 0).
    pub fn atom_at_zero(&self) -> f64 {
        match self {
            EchoLaw::Constant(c) => {
                if *c == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            EchoLaw::Bernoulli(q) => 1.0 - q,
            EchoLaw::Discrete(atoms) => atoms.iter().filter(|a| a.0 == 0.0).map(|a| a.1).sum(),
            EchoLaw::Exponential(_) | EchoLaw::LogNormal { .. } | EchoLaw::Uniform { .. } => 0.0,
            EchoLaw::Scaled(inner, _) => inner.atom_at_zero(),
            EchoLaw::Thinned(inner, k) => 1.0 - k * (1.0 - inner.atom_at_zero()),
        }
    }

    /// True when ξ = 1 almost surely.
    pub fn is_identically_one(&self) -> bool {
        match self.atoms() {
            Some(atoms) => atoms.iter().all(|&(v, w)| v == 1.0 || w == 0.0),
            None => matches!(self, EchoLaw::LogNormal { mu, sigma } if *mu == 0.0 && *sigma == 0.0),
        }
    }

    /// Atoms of a purely discrete law, zero-probability atoms dropped.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            EchoLaw::Constant(c) => Some(vec![(*c, 1.0)]),
            EchoLaw::Bernoulli(q) => Some(
                [(0.0, 1.0 - q), (1.0, *q)]
                    .into_iter()
                    .filter(|a| a.1 > 0.0)
                    .collect(),
            ),
            EchoLaw::Discrete(atoms) => Some(atoms.iter().copied().filter(|a| a.1 > 0.0).collect()),
            EchoLaw::LogNormal { mu, sigma } if *sigma == 0.0 => Some(vec![(mu.exp(), 1.0)]),
            EchoLaw::Exponential(_) | EchoLaw::LogNormal { .. } | EchoLaw::Uniform { .. } => None,
            EchoLaw::Scaled(inner, f) => inner
                .atoms()
                .map(|a| a.into_iter().map(|(v, w)| (v * f, w)).collect()),
            EchoLaw::Thinned(inner, k) => inner.atoms().map(|a| {
                let mut out: Vec<(f64, f64)> = a
                    .into_iter()
                    .map(|(v, w)| (v, w * k))
                    .filter(|x| x.1 > 0.0)
                    .collect();
                if *k < 1.0 {
                    out.push((0.0, 1.0 - k));
                }
                out
            }),
        }
    }

    pub fn is_discrete(&self) -> bool {
        self.atoms().is_some()
    }

    /// Upper end of the support, `None` when unbounded.
    pub fn support_max(&self) -> Option<f64> {
        match self {
            EchoLaw::Exponential(_) => None,
            EchoLaw::LogNormal { mu, sigma } => (*sigma == 0.0).then(|| mu.exp()),
            EchoLaw::Uniform { b, .. } => Some(*b),
            EchoLaw::Scaled(inner, f) => inner.support_max().map(|m| m * f),
            EchoLaw::Thinned(inner, _) => inner.support_max(),
            _ => self
                .atoms()
                .map(|a| a.iter().map(|x| x.0).fold(0.0, f64::max)),
        }
    }

    /// Law of ξ conditioned on ξ > 0.
    pub fn positive_part(&self) -> EchoLaw {
        match self {
            EchoLaw::Bernoulli(_) => EchoLaw::Constant(1.0),
            EchoLaw::Discrete(atoms) => {
                let pos: Vec<(f64, f64)> =
                    atoms.iter().copied().filter(|a| a.0 > 0.0 && a.1 > 0.0).collect();
                let total: f64 = pos.iter().map(|a| a.1).sum();
                let pos: Vec<(f64, f64)> = pos.into_iter().map(|(v, w)| (v, w / total)).collect();
                if pos.len() == 1 {
                    EchoLaw::Constant(pos[0].0)
                } else {
                    EchoLaw::Discrete(pos)
                }
            }
            EchoLaw::Scaled(inner, f) => EchoLaw::Scaled(Box::new(inner.positive_part()), *f),
            EchoLaw::Thinned(inner, _) => inner.positive_part(),
            other => other.clone(),
        }
    }

    /// Open lower end of the exponent range where `m_γ < ∞`; the upper end
    /// is +∞ for every supported family. Laws with an atom at zero accept
    /// γ = 0 (with 0^0 = 1) but no negative exponents.
    pub fn moment_domain_lower(&self) -> f64 {
        if self.atom_at_zero() > 0.0 {
            return 0.0;
        }
        match self {
            EchoLaw::Exponential(_) => -1.0,
            EchoLaw::Uniform { a, .. } if *a == 0.0 => -1.0,
            EchoLaw::Scaled(inner, _) => inner.moment_domain_lower(),
            _ => f64::NEG_INFINITY,
        }
    }

    /// ln m_γ; −∞ when the moment vanishes, +∞ when it diverges.
    pub fn ln_moment(&self, gamma: f64) -> Result<f64> {
        if gamma.is_nan() {
            return Err(Error::OutOfMomentDomain(gamma));
        }
        if gamma < 0.0 && self.atom_at_zero() > 0.0 {
            return Err(Error::NegativeMomentOfAtomAtZero(gamma));
        }
        if gamma == 0.0 {
            return Ok(0.0);
        }
        Ok(match self {
            EchoLaw::Constant(c) => gamma * c.ln(),
            EchoLaw::Bernoulli(q) => q.ln(),
            EchoLaw::Discrete(atoms) => log_sum_exp(
                atoms
                    .iter()
                    .filter(|a| a.1 > 0.0 && a.0 > 0.0)
                    .map(|&(v, w)| w.ln() + gamma * v.ln()),
            ),
            EchoLaw::Exponential(rate) => {
                if gamma <= -1.0 {
                    f64::INFINITY
                } else {
                    ln_gamma(gamma + 1.0) - gamma * rate.ln()
                }
            }
            EchoLaw::LogNormal { mu, sigma } => gamma * mu + 0.5 * gamma * gamma * sigma * sigma,
            EchoLaw::Uniform { a, b } => uniform_ln_moment(*a, *b, gamma),
            EchoLaw::Scaled(inner, f) => gamma * f.ln() + inner.ln_moment(gamma)?,
            EchoLaw::Thinned(inner, k) => k.ln() + inner.ln_moment(gamma)?,
        })
    }

    /// m_γ = E ξ^γ (+∞ when divergent).
    pub fn moment(&self, gamma: f64) -> Result<f64> {
        let ln = self.ln_moment(gamma)?;
        if gamma == 0.0 {
            return Ok(1.0);
        }
        // finite-support laws are summed directly so that e.g. 2^1 is exactly 2
        Ok(match self {
            EchoLaw::Constant(c) => c.powf(gamma),
            EchoLaw::Bernoulli(q) => *q,
            EchoLaw::Discrete(atoms) => atoms
                .iter()
                .filter(|a| a.0 > 0.0)
                .map(|&(v, w)| w * v.powf(gamma))
                .sum(),
            _ => ln.exp(),
        })
    }

    pub fn mean(&self) -> f64 {
        self.moment(1.0).expect("first moment always exists")
    }

    /// E[ξ^γ log ξ] with 0·log 0 = 0. The derivative of γ ↦ m_γ.
    pub fn xi_pow_log_xi(&self, gamma: f64) -> Result<f64> {
        if gamma <= 0.0 && self.atom_at_zero() > 0.0 {
            return Err(Error::DivergentIntegral(
                "E[xi^g log xi] with g <= 0 and an atom at zero".into(),
            ));
        }
        if gamma < self.moment_domain_lower() || (gamma == self.moment_domain_lower()) {
            return Err(Error::OutOfMomentDomain(gamma));
        }
        let v = match self {
            EchoLaw::Constant(c) => c.powf(gamma) * c.ln(),
            EchoLaw::Bernoulli(_) => 0.0,
            EchoLaw::Discrete(atoms) => atoms
                .iter()
                .filter(|a| a.0 > 0.0)
                .map(|&(v, w)| w * v.powf(gamma) * v.ln())
                .sum(),
            EchoLaw::Exponential(rate) => {
                self.moment(gamma)? * (digamma(gamma + 1.0) - rate.ln())
            }
            EchoLaw::LogNormal { mu, sigma } => self.moment(gamma)? * (mu + gamma * sigma * sigma),
            EchoLaw::Uniform { a, b } => {
                let g1 = gamma + 1.0;
                let prim = |x: f64| -> f64 {
                    if x == 0.0 {
                        0.0
                    } else if g1.abs() < 1e-300 {
                        0.5 * x.ln() * x.ln()
                    } else {
                        x.powf(g1) * (x.ln() / g1 - 1.0 / (g1 * g1))
                    }
                };
                (prim(*b) - prim(*a)) / (b - a)
            }
            EchoLaw::Scaled(inner, f) => {
                f.powf(gamma) * (f.ln() * inner.moment(gamma)? + inner.xi_pow_log_xi(gamma)?)
            }
            EchoLaw::Thinned(inner, k) => k * inner.xi_pow_log_xi(gamma)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::DivergentIntegral(format!(
                "E[xi^{gamma} log xi] is not finite"
            )))
        }
    }

    /// E[ξ log ξ].
    pub fn xi_log_xi(&self) -> Result<f64> {
        self.xi_pow_log_xi(1.0)
    }

    /// Draw one ξ.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            EchoLaw::Constant(c) => *c,
            EchoLaw::Bernoulli(q) => {
                if rng.random::<f64>() < *q {
                    1.0
                } else {
                    0.0
                }
            }
            EchoLaw::Discrete(atoms) => sample_atoms(atoms, rng.random::<f64>()),
            EchoLaw::Exponential(rate) => {
                let e: f64 = rng.sample(Exp1);
                e / rate
            }
            EchoLaw::LogNormal { mu, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                (mu + sigma * z).exp()
            }
            EchoLaw::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            EchoLaw::Scaled(inner, f) => f * inner.sample(rng),
            EchoLaw::Thinned(inner, k) => {
                if rng.random::<f64>() < *k {
                    inner.sample(rng)
                } else {
                    0.0
                }
            }
        }
    }
}

fn sample_atoms(atoms: &[(f64, f64)], u: f64) -> f64 {
    let mut acc = 0.0;
    for &(v, w) in atoms {
        acc += w;
        if u < acc {
            return v;
        }
    }
    atoms
        .iter()
        .rev()
        .find(|a| a.1 > 0.0)
        .map(|a| a.0)
        .unwrap_or(atoms[atoms.len() - 1].0)
}

fn log_sum_exp<I: Iterator<Item = f64>>(it: I) -> f64 {
    let v: Vec<f64> = it.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn uniform_ln_moment(a: f64, b: f64, gamma: f64) -> f64 {
    let g1 = gamma + 1.0;
    let width = (b - a).ln();
    if g1 == 0.0 {
        if a == 0.0 {
            return f64::INFINITY;
        }
        return ((b.ln() - a.ln()) / (b - a)).ln();
    }
    if g1 > 0.0 {
        // b^{g1} (1 - (a/b)^{g1}) / (g1 (b - a))
        let r = if a == 0.0 { 0.0 } else { (g1 * (a / b).ln()).exp() };
        g1 * b.ln() + (-r).ln_1p() - g1.ln() - width
    } else {
        if a == 0.0 {
            return f64::INFINITY;
        }
        // a^{g1} (1 - (b/a)^{g1}) / (|g1| (b - a))
        let r = (g1 * (b / a).ln()).exp();
        g1 * a.ln() + (-r).ln_1p() - (-g1).ln() - width
    }
}

/// Law of the innovation spin X.
#[derive(Debug, Clone, PartialEq)]
pub enum SpinLaw {
    Constant(f64),
    Rademacher,
    Normal { mu: f64, sigma: f64 },
    Uniform { a: f64, b: f64 },
    Exponential(f64),
}

impl SpinLaw {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidLaw(m));
        match self {
            SpinLaw::Constant(c) => {
                if !c.is_finite() {
                    return bad(format!("constant spin must be finite, got {c}"));
                }
                if *c == 0.0 {
                    return Err(Error::DegenerateModel("X = 0 almost surely".into()));
                }
            }
            SpinLaw::Rademacher => {}
            SpinLaw::Normal { mu, sigma } => {
                if !mu.is_finite() || !(sigma.is_finite() && *sigma >= 0.0) {
                    return bad(format!("normal spin needs finite mu and sigma >= 0, got {mu}, {sigma}"));
                }
                if *sigma == 0.0 && *mu == 0.0 {
                    return Err(Error::DegenerateModel("X = 0 almost surely".into()));
                }
            }
            SpinLaw::Uniform { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return bad(format!("uniform spin needs a < b, got {a}, {b}"));
                }
            }
            SpinLaw::Exponential(rate) => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return bad(format!("exponential rate must be > 0, got {rate}"));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match self {
            SpinLaw::Constant(c) => *c,
            SpinLaw::Rademacher => 0.0,
            SpinLaw::Normal { mu, .. } => *mu,
            SpinLaw::Uniform { a, b } => 0.5 * (a + b),
            SpinLaw::Exponential(rate) => 1.0 / rate,
        }
    }

    /// E|X|^q for q > −1.
    pub fn abs_moment(&self, q: f64) -> Result<f64> {
        if q == 0.0 {
            return Ok(1.0);
        }
        match self {
            SpinLaw::Constant(c) => Ok(c.abs().powf(q)),
            SpinLaw::Rademacher => Ok(1.0),
            _ if q <= -1.0 => Err(Error::OutOfMomentDomain(q)),
            SpinLaw::Normal { mu, sigma } => {
                if *sigma == 0.0 {
                    return Ok(mu.abs().powf(q));
                }
                if *mu == 0.0 {
                    let v = sigma.powf(q) * 2f64.powf(q / 2.0)
                        * (ln_gamma((q + 1.0) / 2.0)).exp()
                        / std::f64::consts::PI.sqrt();
                    return Ok(v);
                }
                let (mu, s) = (*mu, *sigma);
                let dens = move |x: f64| {
                    let z = (x - mu) / s;
                    (-0.5 * z * z).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
                };
                let pos = quad::integrate_to_infinity(|x| x.powf(q) * dens(x), 0.0, 1e-12)?;
                let neg = quad::integrate_to_infinity(|x| x.powf(q) * dens(-x), 0.0, 1e-12)?;
                Ok(pos + neg)
            }
            SpinLaw::Uniform { a, b } => {
                let g1 = q + 1.0;
                let (a, b) = (*a, *b);
                let num = if a >= 0.0 {
                    b.powf(g1) - a.powf(g1)
                } else if b <= 0.0 {
                    (-a).powf(g1) - (-b).powf(g1)
                } else {
                    (-a).powf(g1) + b.powf(g1)
                };
                Ok(num / (g1 * (b - a)))
            }
            SpinLaw::Exponential(rate) => Ok((ln_gamma(q + 1.0) - q * rate.ln()).exp()),
        }
    }

    /// Supremum of the exponents with finite absolute moment.
    pub fn moment_sup(&self) -> f64 {
        f64::INFINITY
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            SpinLaw::Constant(c) => *c,
            SpinLaw::Rademacher => {
                if rng.random::<f64>() < 0.5 {
                    1.0
                } else {
                    -1.0
                }
            }
            SpinLaw::Normal { mu, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                mu + sigma * z
            }
            SpinLaw::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            SpinLaw::Exponential(rate) => {
                let e: f64 = rng.sample(Exp1);
                e / rate
            }
        }
    }
}

/// The full model configuration: memory parameter p with echo and spin laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkParams {
    pub p: f64,
    pub echo: EchoLaw,
    pub spin: SpinLaw,
}

impl WalkParams {
    pub fn new(p: f64, echo: EchoLaw, spin: SpinLaw) -> Result<Self> {
        let params = WalkParams { p, echo, spin };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            if self.p == 0.0 {
                return Err(Error::DegenerateModel(
                    "p = 0 gives an ordinary random walk".into(),
                ));
            }
            return Err(Error::InvalidParameter(format!(
                "p must lie in (0, 1], got {}",
                self.p
            )));
        }
        self.echo.validate()?;
        self.spin.validate()
    }

    /// m_1 = E ξ.
    pub fn m1(&self) -> f64 {
        self.echo.mean()
    }

    /// p · m_1, the parameter driving the phase transition.
    pub fn pm1(&self) -> f64 {
        self.p * self.m1()
    }

    pub fn regime(&self) -> Regime {
        Regime::of(self.pm1())
    }

    /// The compound echo law εξ with ε ~ Bernoulli(p).
    pub fn thinned_echo(&self) -> EchoLaw {
        self.echo
            .clone()
            .thinned(self.p)
            .expect("a valid law stays valid under thinning")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Supercritical,
    Critical,
    Subcritical,
}

impl Regime {
    pub fn of(pm1: f64) -> Regime {
        if (pm1 - 1.0).abs() <= CRITICAL_TOL {
            Regime::Critical
        } else if pm1 > 1.0 {
            Regime::Supercritical
        } else {
            Regime::Subcritical
        }
    }
}

/// Output of [`classify`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub pm1: f64,
    pub regime: Regime,
    pub xi_log_xi: f64,
    /// E[ξ log ξ] < m_1.
    pub ui_holds: bool,
    pub lambda_nonempty: bool,
    /// sup Λ; +∞ when unbounded, NaN when Λ is empty.
    #[serde(with = "crate::io::nonfinite")]
    pub lambda_sup: f64,
    /// 1/pm_1 is interior to the moment domain and p m_{1/pm_1} < 1.
    pub subcritical_refined: bool,
    /// Asymptotic constant of E S̃_n.
    pub limit_constant: f64,
    pub scaling_exponent: f64,
    pub log_correction: bool,
}

/// φ_θ(r) = m_{rθ} / r.
pub fn phi(law: &EchoLaw, theta: f64, r: f64) -> Result<f64> {
    Ok(ln_phi(law, theta, r)?.exp())
}

fn ln_phi(law: &EchoLaw, theta: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::OutOfMomentDomain(r * theta));
    }
    let g = r * theta;
    if g <= law.moment_domain_lower() && !(g == 0.0 && law.moment_domain_lower() == 0.0) {
        return Err(Error::OutOfMomentDomain(g));
    }
    let lm = law.ln_moment(g)?;
    if lm == f64::INFINITY {
        return Err(Error::OutOfMomentDomain(g));
    }
    Ok(lm - r.ln())
}

/// Minimiser r_θ of the strictly convex φ_θ, or +∞ when φ_θ decreases on the
/// whole domain.
pub fn phi_minimizer(law: &EchoLaw, theta: f64) -> Result<f64> {
    if !(theta > 0.0) || theta <= law.moment_domain_lower() {
        return Err(Error::OutOfMomentDomain(theta));
    }
    // φ_θ → +∞ as r → 0, so scan a geometric grid for the first rise.
    let lo_exp = -30;
    let hi_exp = 60;
    let f = |s: f64| ln_phi(law, theta, s.exp());
    let mut best = (lo_exp, f64::INFINITY);
    for k in lo_exp..=hi_exp {
        let s = k as f64 * 0.5 * std::f64::consts::LN_2;
        let v = match f(s) {
            Ok(v) => v,
            Err(_) => continue,
        };
        if v < best.1 {
            best = (k, v);
        } else if v > best.1 {
            break;
        }
    }
    if best.0 == hi_exp {
        return Ok(f64::INFINITY);
    }
    let step = 0.5 * std::f64::consts::LN_2;
    let mut a = (best.0 - 1) as f64 * step;
    let mut b = (best.0 + 1) as f64 * step;
    // golden-section in s = ln r; relative tolerance on r is the width in s
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let eval = |s: f64| f(s).unwrap_or(f64::INFINITY);
    let (mut fc, mut fd) = (eval(c), eval(d));
    while (b - a) > 1e-9 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d);
        }
    }
    Ok((0.5 * (a + b)).exp())
}

/// sup{γ > 1 : m_γ < γ m_1 and E|X|^γ < ∞}, or None when the set is empty.
pub fn lambda_sup(echo: &EchoLaw, spin: &SpinLaw) -> Result<Option<f64>> {
    if !(echo.xi_log_xi()? < echo.mean()) {
        return Ok(None);
    }
    let cap = spin.moment_sup();
    let rstar = phi_minimizer(echo, 1.0)?;
    if rstar.is_infinite() {
        return Ok(Some(cap));
    }
    let ln_m1 = echo.mean().ln();
    let gap = |g: f64| -> f64 {
        match ln_phi(echo, 1.0, g) {
            Ok(v) => v - ln_m1,
            Err(_) => f64::INFINITY,
        }
    };
    if gap(rstar) >= 0.0 {
        // numerically at the boundary of the UI condition
        return Ok(None);
    }
    let mut lo = rstar;
    let mut hi = 2.0 * rstar;
    while gap(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e15 {
            return Ok(Some(cap));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(Some(hi.min(cap)))
}

/// Classify the regime, uniform integrability and Λ, and attach the
/// asymptotic constants of the mean.
pub fn classify(params: &WalkParams) -> Result<RegimeReport> {
    params.validate()?;
    let m1 = params.m1();
    let pm1 = params.pm1();
    let xlx = params.echo.xi_log_xi()?;
    let ui = xlx < m1;
    let sup = lambda_sup(&params.echo, &params.spin)?;
    let asym = analytic::asymptotic_mean_constant(params)?;

    let subcritical_refined = if pm1 < 1.0 - CRITICAL_TOL {
        let g = 1.0 / pm1;
        let interior = g > params.echo.moment_domain_lower() && g < params.spin.moment_sup();
        interior && params.p * params.echo.moment(g)? < 1.0
    } else {
        false
    };

    Ok(RegimeReport {
        pm1,
        regime: Regime::of(pm1),
        xi_log_xi: xlx,
        ui_holds: ui,
        lambda_nonempty: ui,
        lambda_sup: sup.unwrap_or(f64::NAN),
        subcritical_refined,
        limit_constant: asym.constant,
        scaling_exponent: asym.exponent,
        log_correction: asym.log_correction,
    })
}

// ---------------------------------------------------------------------------
// string grammar

fn fmt_f(x: f64) -> String {
    format!("{x}")
}

impl fmt::Display for EchoLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EchoLaw::Constant(c) => write!(f, "const:{}", fmt_f(*c)),
            EchoLaw::Bernoulli(q) => write!(f, "bernoulli:{}", fmt_f(*q)),
            EchoLaw::Discrete(atoms) => {
                let parts: Vec<String> = atoms
                    .iter()
                    .map(|(v, w)| format!("{}@{}", fmt_f(*v), fmt_f(*w)))
                    .collect();
                write!(f, "discrete:{}", parts.join(","))
            }
            EchoLaw::Exponential(r) => write!(f, "exp:{}", fmt_f(*r)),
            EchoLaw::LogNormal { mu, sigma } => write!(f, "lognormal:{},{}", fmt_f(*mu), fmt_f(*sigma)),
            EchoLaw::Uniform { a, b } => write!(f, "uniform:{},{}", fmt_f(*a), fmt_f(*b)),
            EchoLaw::Scaled(inner, s) => write!(f, "scaled:{}:{}", fmt_f(*s), inner),
            EchoLaw::Thinned(inner, k) => write!(f, "thinned:{}:{}", fmt_f(*k), inner),
        }
    }
}

fn parse_num(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("bad number '{s}' in {what}")))
}

fn parse_pair(s: &str, what: &str) -> Result<(f64, f64)> {
    let mut it = s.split(',');
    match (it.next(), it.next(), it.next()) {
        (Some(a), Some(b), None) => Ok((parse_num(a, what)?, parse_num(b, what)?)),
        _ => Err(Error::Parse(format!("{what} needs two comma-separated numbers, got '{s}'"))),
    }
}

impl FromStr for EchoLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        let law = match head {
            "const" | "constant" => EchoLaw::Constant(parse_num(rest, "const")?),
            "bernoulli" => EchoLaw::Bernoulli(parse_num(rest, "bernoulli")?),
            "discrete" => {
                let mut atoms = Vec::new();
                for part in rest.split(',') {
                    let (v, w) = part.split_once('@').ok_or_else(|| {
                        Error::Parse(format!("discrete atom '{part}' must look like value@prob"))
                    })?;
                    atoms.push((parse_num(v, "discrete")?, parse_num(w, "discrete")?));
                }
                EchoLaw::Discrete(atoms)
            }
            "exp" | "exponential" => EchoLaw::Exponential(parse_num(rest, "exp")?),
            "lognormal" => {
                let (mu, sigma) = parse_pair(rest, "lognormal")?;
                EchoLaw::LogNormal { mu, sigma }
            }
            "uniform" => {
                let (a, b) = parse_pair(rest, "uniform")?;
                EchoLaw::Uniform { a, b }
            }
            "scaled" | "thinned" => {
                let (x, inner) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("{head} needs '<number>:<law>'")))?;
                let x = parse_num(x, head)?;
                let inner = Box::new(inner.parse::<EchoLaw>()?);
                if head == "scaled" {
                    EchoLaw::Scaled(inner, x)
                } else {
                    EchoLaw::Thinned(inner, x)
                }
            }
            "rademacher" | "normal" => {
                return Err(Error::InvalidLaw(format!(
                    "'{head}' has negative support and is only valid as a spin law"
                )))
            }
            _ => return Err(Error::Parse(format!("unknown echo law '{s}'"))),
        };
        law.validate()?;
        Ok(law)
    }
}

impl fmt::Display for SpinLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpinLaw::Constant(c) => write!(f, "const:{}", fmt_f(*c)),
            SpinLaw::Rademacher => write!(f, "rademacher"),
            SpinLaw::Normal { mu, sigma } => write!(f, "normal:{},{}", fmt_f(*mu), fmt_f(*sigma)),
            SpinLaw::Uniform { a, b } => write!(f, "uniform:{},{}", fmt_f(*a), fmt_f(*b)),
            SpinLaw::Exponential(r) => write!(f, "exp:{}", fmt_f(*r)),
        }
    }
}

impl FromStr for SpinLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        let law = match head {
            "const" | "constant" => SpinLaw::Constant(parse_num(rest, "const")?),
            "rademacher" => SpinLaw::Rademacher,
            "normal" => {
                let (mu, sigma) = parse_pair(rest, "normal")?;
                SpinLaw::Normal { mu, sigma }
            }
            "uniform" => {
                let (a, b) = parse_pair(rest, "uniform")?;
                SpinLaw::Uniform { a, b }
            }
            "exp" | "exponential" => SpinLaw::Exponential(parse_num(rest, "exp")?),
            _ => return Err(Error::Parse(format!("unknown spin law '{s}'"))),
        };
        law.validate()?;
        Ok(law)
    }
}

macro_rules! serde_via_str {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

serde_via_str!(EchoLaw);
serde_via_str!(SpinLaw);
