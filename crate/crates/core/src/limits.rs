//! Sample pools approximating the limit laws.
//!
//! The pure-echo limit L^(ξ) solves L = V^{m₁} L̂ + ξ (1−V)^{m₁} Ľ and is
//! approximated by population dynamics: every generation rebuilds the pool
//! from pairs drawn out of the previous one. Component limits L_r and the
//! series Σ X_r L_r are built on top of such a pool.

use std::path::Path;

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analytic;
use crate::error::{Error, Result};
use crate::io::{fmt_f64, sidecar_path, write_csv, write_json, Sidecar};
use crate::laws::{EchoLaw, WalkParams, CRITICAL_TOL};
use crate::stats::{mean_and_se, MeanSe};
use crate::tape::{RandomTape, Slot};
use crate::urn::beta_limit_sample;

/// Pool entries updated per random stream; fixed so that the output never
/// depends on the number of worker threads.
const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePool {
    pub samples: Vec<f64>,
    pub generation: usize,
    /// Law the pool approximates, in the law grammar or a short description.
    pub law: String,
    pub tape: RandomTape,
    /// Set when the target is the zero law.
    pub degenerate: bool,
    /// Set when the pool mean was rescaled to the exact mean every generation.
    pub renormalized: bool,
}

impl SamplePool {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Empirical E[L^k] with its standard error.
    pub fn moment(&self, k: i32) -> MeanSe {
        let xs: Vec<f64> = self.samples.iter().map(|x| x.powi(k)).collect();
        mean_and_se(&xs)
    }

    pub fn mean(&self) -> f64 {
        self.moment(1).mean
    }

    pub fn zero_fraction(&self) -> f64 {
        self.samples.iter().filter(|&&x| x == 0.0).count() as f64 / self.len() as f64
    }

    pub fn csv_rows(&self) -> impl Iterator<Item = String> + '_ {
        self.samples.iter().map(|x| fmt_f64(*x))
    }

    /// Single-column CSV plus a JSON sidecar with law, size, generations,
    /// seed and the first three moments.
    pub fn write<P: AsRef<Path>>(&self, path: P, config: serde_json::Value) -> Result<()> {
        let path = path.as_ref();
        write_csv(path, "sample", self.csv_rows())?;
        let moments: Vec<f64> = (1..=3).map(|k| self.moment(k).mean).collect();
        let meta = json!({
            "law": self.law,
            "N": self.len(),
            "generations": self.generation,
            "seed": self.tape.master_seed,
            "moments": moments,
            "degenerate": self.degenerate,
            "renormalized": self.renormalized,
        });
        write_json(sidecar_path(path), &Sidecar::new("fixpoint", config, self.tape.master_seed, meta))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixpointOptions {
    pub size: usize,
    pub generations: usize,
    /// Rescale the pool to mean 1/Γ(1+m₁) after every generation.
    pub renormalize: bool,
}

impl Default for FixpointOptions {
    fn default() -> Self {
        FixpointOptions {
            size: 100_000,
            generations: 200,
            renormalize: true,
        }
    }
}

fn degenerate_pool(law: &EchoLaw, size: usize, tape: &RandomTape, renormalize: bool) -> SamplePool {
    SamplePool {
        samples: vec![0.0; size],
        generation: 0,
        law: law.to_string(),
        tape: *tape,
        degenerate: true,
        renormalized: renormalize,
    }
}

/// One population-dynamics generation.
fn next_generation(law: &EchoLaw, m1: f64, prev: &[f64], tape: &RandomTape) -> Vec<f64> {
    let n = prev.len();
    let mut out = vec![0.0; n];
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
        let t = tape.child(c as u64);
        let mut idx = t.rng(Slot::Index);
        let mut unif = t.rng(Slot::Uniform);
        let mut echo = t.rng(Slot::Echo);
        for slot in chunk.iter_mut() {
            let a = prev[idx.random_range(0..n)];
            let b = prev[idx.random_range(0..n)];
            let v: f64 = unif.random();
            let xi = law.sample(&mut echo);
            let right = if xi == 0.0 || b == 0.0 { 0.0 } else { xi * (1.0 - v).powf(m1) * b };
            *slot = v.powf(m1) * a + right;
        }
    });
    out
}

/// Population dynamics for L^(ξ).
pub fn fixpoint_pool(law: &EchoLaw, opts: FixpointOptions, tape: &RandomTape) -> Result<SamplePool> {
    law.validate()?;
    if opts.size == 0 {
        return Err(Error::InvalidParameter("pool size must be >= 1".into()));
    }
    let mean = analytic::pure_echo_limit_mean(law)?;
    if mean.degenerate {
        return Ok(degenerate_pool(law, opts.size, tape, opts.renormalize));
    }
    let m1 = law.mean();
    let mut pool = vec![mean.value; opts.size];
    let root = tape.derive("fixpoint");
    for g in 0..opts.generations {
        pool = next_generation(law, m1, &pool, &root.with_stream(g as u64 + 1));
        if opts.renormalize {
            let current = pool.iter().sum::<f64>() / pool.len() as f64;
            if current > 0.0 {
                let f = mean.value / current;
                pool.iter_mut().for_each(|x| *x *= f);
            }
        }
    }
    Ok(SamplePool {
        samples: pool,
        generation: opts.generations,
        law: law.to_string(),
        tape: *tape,
        degenerate: false,
        renormalized: opts.renormalize,
    })
}

/// Run further generations on an existing pool.
pub fn advance(pool: &SamplePool, law: &EchoLaw, generations: usize, tape: &RandomTape) -> SamplePool {
    if pool.degenerate {
        return pool.clone();
    }
    let m1 = law.mean();
    let target = 1.0 / crate::special::gamma(1.0 + m1);
    let mut s = pool.samples.clone();
    let root = tape.derive("fixpoint-advance");
    for g in 0..generations {
        s = next_generation(law, m1, &s, &root.with_stream(g as u64 + 1));
        if pool.renormalized {
            let current = s.iter().sum::<f64>() / s.len() as f64;
            s.iter_mut().for_each(|x| *x *= target / current);
        }
    }
    SamplePool {
        samples: s,
        generation: pool.generation + generations,
        ..pool.clone()
    }
}

/// Pool for L_r^{(p,ξ)} = (1−ε_r) L^{(εξ)} β_r^{pm₁} from a pool for L^{(εξ)}.
pub fn component_pool(params: &WalkParams, r: u64, base: &SamplePool, tape: &RandomTape) -> Result<SamplePool> {
    if r == 0 {
        return Err(Error::InvalidParameter("component index starts at 1".into()));
    }
    if r == 1 {
        return Ok(base.clone());
    }
    let pm1 = params.pm1();
    let p = params.p;
    let root = tape.derive("component");
    let mut out = vec![0.0; base.len()];
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
        let t = root.child(c as u64);
        let mut eps = t.rng(Slot::Epsilon);
        let mut beta = t.rng(Slot::Uniform);
        for (i, slot) in chunk.iter_mut().enumerate() {
            let kept = eps.random::<f64>() < p;
            let b = beta_limit_sample(r, &mut beta);
            *slot = if kept { 0.0 } else { base.samples[c * CHUNK + i] * b.powf(pm1) };
        }
    });
    Ok(SamplePool {
        samples: out,
        generation: base.generation,
        law: format!("component r={r} of p={p}, echo {}", params.echo),
        tape: *tape,
        degenerate: base.degenerate,
        renormalized: base.renormalized,
    })
}

/// Output of [`series_limit_pool`].
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPool {
    pub pool: SamplePool,
    pub truncation: u64,
    /// Subtract E X · E L_r from every term (the pm₁ <= 1 centred series).
    pub centered: bool,
    /// Σ_{r>R} E X · E L_r; add it to the pool mean to compare with E M_∞.
    pub tail_mean: f64,
    /// Σ_{r>R} E|X| · E L_r, an upper bound on E|Σ_{r>R} X_r L_r|
    /// (uncentred series only).
    pub tail_bound: Option<f64>,
    /// sqrt(Σ_{r>R} E[X²] E[L_r²]), the L² norm of the tail when E X = 0.
    pub tail_l2: Option<f64>,
}

impl SeriesPool {
    /// Samples shifted by the tail mean. For pm₁ > 1 the dropped tail has
    /// standard deviation of order R^{1/2−pm₁}, well below its mean R^{1−pm₁},
    /// so the shift is the natural first-order correction.
    pub fn tail_shifted(&self) -> Vec<f64> {
        self.pool.samples.iter().map(|x| x + self.tail_mean).collect()
    }
}

/// Samples of the truncated series Σ_{r≤R} X_r L_r^{(p,ξ)}.
///
/// The L_r are dependent, so they are drawn jointly: grow the first R
/// vertices of the memory tree, split the future mass among them by a flat
/// Dirichlet vector D (the limit of an R-colour Pólya urn), and attach to
/// vertex j an independent L'_j ~ L^{(εξ)} from `base`. Then
/// L_r = Σ_{j≤R, root(j)=r} ω(j) L'_j D_j^{pm₁}.
pub fn series_limit_pool(
    params: &WalkParams,
    truncation: u64,
    size: usize,
    base: &SamplePool,
    tape: &RandomTape,
) -> Result<SeriesPool> {
    params.validate()?;
    let pm1 = params.pm1();
    let p = params.p;
    let centered = if p == 1.0 || pm1 > 1.0 + CRITICAL_TOL {
        false
    } else if pm1 > 0.5 {
        true
    } else {
        return Err(Error::HypothesisViolation(format!(
            "the component series needs p m1 > 1/2 (got {pm1})"
        )));
    };
    if truncation == 0 || base.is_empty() {
        return Err(Error::InvalidParameter("truncation and base pool must be non-empty".into()));
    }
    let rr = truncation as usize;
    let ex = params.spin.mean();
    let centering: Vec<f64> = if centered {
        (1..=truncation)
            .map(|r| Ok(ex * analytic::component_limit_mean(params, r)?.value))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let root = tape.derive("series");
    let nb = base.len();
    let samples: Vec<f64> = (0..size as u64)
        .into_par_iter()
        .map_init(
            || (vec![0usize; rr], vec![0.0f64; rr], vec![0.0f64; rr], vec![0.0f64; rr]),
            |(comp, omega, dir, lr), j| {
                let t = root.child(j);
                let mut eps = t.rng(Slot::Epsilon);
                let mut par = t.rng(Slot::Parent);
                let mut echo = t.rng(Slot::Echo);
                let mut spin = t.rng(Slot::Spin);
                let mut gam = t.rng(Slot::Uniform);
                let mut idx = t.rng(Slot::Index);
                let mut total = 0.0;
                for k in 0..rr {
                    if k == 0 {
                        comp[0] = 0;
                        omega[0] = 1.0;
                    } else {
                        let kept = eps.random::<f64>() < p;
                        let u = par.random_range(0..k);
                        let xi = params.echo.sample(&mut echo);
                        if kept {
                            comp[k] = comp[u];
                            omega[k] = xi * omega[u];
                        } else {
                            comp[k] = k;
                            omega[k] = 1.0;
                        }
                    }
                    let e: f64 = gam.sample(Exp1);
                    dir[k] = e;
                    total += e;
                    lr[k] = 0.0;
                }
                for k in 0..rr {
                    let l = base.samples[idx.random_range(0..nb)];
                    if omega[k] != 0.0 && l != 0.0 {
                        lr[comp[k]] += omega[k] * l * (dir[k] / total).powf(pm1);
                    }
                }
                let mut s = 0.0;
                for r in 0..rr {
                    // X_r is drawn for every r to keep the spin stream aligned
                    let x = params.spin.sample(&mut spin);
                    s += x * lr[r];
                    if centered {
                        s -= centering[r];
                    }
                }
                s
            },
        )
        .collect();
    let tail_mean = if pm1 > 1.0 + CRITICAL_TOL && p < 1.0 {
        ex * analytic::series_tail_mean(params, truncation)?
    } else {
        0.0
    };
    let tail_bound = if !centered {
        if p == 1.0 {
            Some(0.0)
        } else {
            Some(params.spin.abs_moment(1.0)? * analytic::series_tail_mean(params, truncation)?)
        }
    } else {
        None
    };
    let tail_l2 = if ex == 0.0 && p < 1.0 {
        // Σ_{r>R} E L_r² = (1−p) Γ(1+2pm₁) E[(L^{(εξ)})²] Γ(R+1)/Γ(R+2pm₁)/(2pm₁−1)
        analytic::l_moments(&params.thinned_echo(), 2).ok().map(|m| {
            let x2 = params.spin.abs_moment(2.0).unwrap_or(f64::NAN);
            let two = 2.0 * pm1;
            let g = crate::special::ln_gamma(1.0 + two)
                + crate::special::ln_gamma_ratio(truncation as f64, 1.0, two);
            (x2 * (1.0 - p) * g.exp() * m[1] / (two - 1.0)).sqrt()
        })
    } else {
        None
    };
    Ok(SeriesPool {
        pool: SamplePool {
            samples,
            generation: base.generation,
            law: format!("series R={truncation} of p={p}, echo {}, spin {}", params.echo, params.spin),
            tape: *tape,
            degenerate: base.degenerate,
            renormalized: base.renormalized,
        },
        truncation,
        centered,
        tail_mean,
        tail_bound,
        tail_l2,
    })
}

/// Empirical characteristic function of a pool, tabulated on a uniform grid
/// of [0, t_max] and interpolated linearly; arguments beyond the grid are
/// evaluated directly.
pub struct EmpiricalCf<'a> {
    samples: &'a [f64],
    step: f64,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl<'a> EmpiricalCf<'a> {
    pub fn new(samples: &'a [f64], t_max: f64, points: usize) -> Self {
        let step = t_max / points as f64;
        let chunks: Vec<(Vec<f64>, Vec<f64>)> = samples
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut re = vec![0.0; points + 1];
                let mut im = vec![0.0; points + 1];
                for &x in chunk {
                    // e^{i k h x} by repeated multiplication with e^{i h x}
                    let (s, c) = (step * x).sin_cos();
                    let (mut zr, mut zi) = (1.0f64, 0.0f64);
                    for k in 0..=points {
                        re[k] += zr;
                        im[k] += zi;
                        let nr = zr * c - zi * s;
                        zi = zr * s + zi * c;
                        zr = nr;
                    }
                }
                (re, im)
            })
            .collect();
        let mut re = vec![0.0; points + 1];
        let mut im = vec![0.0; points + 1];
        for (r, i) in chunks {
            for k in 0..=points {
                re[k] += r[k];
                im[k] += i[k];
            }
        }
        let n = samples.len() as f64;
        re.iter_mut().for_each(|v| *v /= n);
        im.iter_mut().for_each(|v| *v /= n);
        EmpiricalCf { samples, step, re, im }
    }

    fn direct(&self, t: f64) -> (f64, f64) {
        let n = self.samples.len() as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for &x in self.samples {
            let (s, c) = (t * x).sin_cos();
            re += c;
            im += s;
        }
        (re / n, im / n)
    }

    /// φ̂(t) as (real, imaginary).
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let a = t.abs();
        let pos = a / self.step;
        let k = pos.floor() as usize;
        let (re, im) = if k + 1 < self.re.len() {
            let w = pos - k as f64;
            (
                self.re[k] * (1.0 - w) + self.re[k + 1] * w,
                self.im[k] * (1.0 - w) + self.im[k + 1] * w,
            )
        } else {
            self.direct(a)
        };
        if t < 0.0 {
            (re, -im)
        } else {
            (re, im)
        }
    }
}

/// max over the grid of |φ̂(t) − (1/K) Σ_k φ̂(t V_k^{m₁}) φ̂(t ξ_k (1−V_k)^{m₁})|.
pub fn ecf_residual(pool: &SamplePool, law: &EchoLaw, t_grid: &[f64], draws: usize, tape: &RandomTape) -> f64 {
    if pool.degenerate || t_grid.is_empty() {
        // φ̂ ≡ 1 satisfies the relation exactly
        return 0.0;
    }
    let m1 = law.mean();
    let t_abs = t_grid.iter().fold(0.0f64, |a, t| a.max(t.abs()));
    let reach = law.support_max().unwrap_or(10.0 * m1).max(1.0);
    let cf = EmpiricalCf::new(&pool.samples, t_abs * reach, 4000);
    let root = tape.derive("ecf");
    let mut unif = root.rng(Slot::Uniform);
    let mut echo = root.rng(Slot::Echo);
    let aux: Vec<(f64, f64)> = (0..draws)
        .map(|_| {
            let v: f64 = unif.random();
            let xi = law.sample(&mut echo);
            (v.powf(m1), xi * (1.0 - v).powf(m1))
        })
        .collect();
    t_grid
        .par_iter()
        .map(|&t| {
            let (pr, pi) = cf.eval(t);
            let (mut sr, mut si) = (0.0, 0.0);
            for &(a, b) in &aux {
                let (ar, ai) = cf.eval(t * a);
                let (br, bi) = cf.eval(t * b);
                sr += ar * br - ai * bi;
                si += ar * bi + ai * br;
            }
            let k = aux.len() as f64;
            ((pr - sr / k).powi(2) + (pi - si / k).powi(2)).sqrt()
        })
        .reduce(|| 0.0, f64::max)
}

/// Evenly spaced grid of `points` values on [a, b].
pub fn linspace(a: f64, b: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![a];
    }
    (0..points)
        .map(|i| a + (b - a) * i as f64 / (points - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law(s: &str) -> EchoLaw {
        s.parse().unwrap()
    }

    #[test]
    fn unit_echo_pool_is_invariant() {
        let opts = FixpointOptions { size: 5000, generations: 5, renormalize: false };
        let pool = fixpoint_pool(&law("const:1"), opts, &RandomTape::new(1, 0)).unwrap();
        assert!(pool.samples.iter().all(|&x| (x - 1.0).abs() < 1e-12));
        let r = ecf_residual(&pool, &law("const:1"), &linspace(-5.0, 5.0, 11), 1000, &RandomTape::new(2, 0));
        // only the linear-interpolation error of the tabulated cf remains
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn degenerate_pool_is_zero() {
        let pool = fixpoint_pool(&law("const:3"), FixpointOptions { size: 100, ..Default::default() }, &RandomTape::new(1, 0)).unwrap();
        assert!(pool.degenerate);
        assert!(pool.samples.iter().all(|&x| x == 0.0));
        assert_eq!(ecf_residual(&pool, &law("const:3"), &[1.0, 2.0], 10, &RandomTape::new(1, 0)), 0.0);
    }

    #[test]
    fn pool_independent_of_thread_count() {
        let opts = FixpointOptions { size: 3 * CHUNK + 17, generations: 3, renormalize: true };
        let tape = RandomTape::new(8, 0);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| fixpoint_pool(&law("exp:1"), opts, &tape).unwrap());
        let b = three.install(|| fixpoint_pool(&law("exp:1"), opts, &tape).unwrap());
        assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn component_r1_is_identity_and_atoms() {
        let pr = WalkParams::new(0.6, law("const:2"), "const:1".parse().unwrap()).unwrap();
        let base = fixpoint_pool(&pr.thinned_echo(), FixpointOptions { size: 20_000, generations: 20, renormalize: true }, &RandomTape::new(3, 0)).unwrap();
        let c1 = component_pool(&pr, 1, &base, &RandomTape::new(4, 0)).unwrap();
        assert_eq!(c1.samples, base.samples);
        let c3 = component_pool(&pr, 3, &base, &RandomTape::new(4, 0)).unwrap();
        assert!(c3.zero_fraction() >= 0.6 - 4.0 * (0.24f64 / 20_000.0).sqrt());
    }

    #[test]
    fn series_unit_case_is_first_spin() {
        let pr = WalkParams::new(1.0, law("const:1"), "const:1".parse().unwrap()).unwrap();
        let base = fixpoint_pool(&law("const:1"), FixpointOptions { size: 100, generations: 1, renormalize: false }, &RandomTape::new(3, 0)).unwrap();
        let s = series_limit_pool(&pr, 50, 200, &base, &RandomTape::new(5, 0)).unwrap();
        for x in &s.pool.samples {
            assert!((x - 1.0).abs() < 1e-12);
        }
        assert_eq!(s.tail_bound, Some(0.0));
    }

    #[test]
    fn cf_interpolation_accuracy() {
        let xs: Vec<f64> = (0..2000).map(|i| (i as f64 * 0.618).fract() * 2.0).collect();
        let cf = EmpiricalCf::new(&xs, 6.0, 4000);
        for &t in &[-5.3, -0.2, 0.0, 1.7, 5.99, 8.0] {
            let (a, b) = cf.eval(t);
            let (c, d) = cf.direct(t.abs());
            let d = if t < 0.0 { -d } else { d };
            assert!((a - c).abs() < 1e-5 && (b - d).abs() < 1e-5, "t={t}");
        }
    }
}
