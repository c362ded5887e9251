//! Continuous-time branching random walk driven by a Yule clock.
//!
//! Each particle gives birth at rate 1; a child sits at its parent's position
//! shifted by log ξ, while the parent stays put. With k particles alive the
//! next birth comes after an Exp(k) wait from a uniformly chosen parent, so
//! the genealogy read in birth order is a uniform random recursive tree.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{csv_string, fmt_f64, write_csv};
use crate::laws::EchoLaw;
use crate::stats::{mean_and_se, MeanSe};
use crate::tape::{RandomTape, Slot};

/// Guard on the expected number of particles.
pub const PARTICLE_GUARD: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "value")]
pub enum Horizon {
    /// Run the clock up to time t.
    Time(f64),
    /// Stop at the birth of the n-th particle.
    Particles(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrwState {
    /// Parent of each particle (0-based); `None` for the ancestor.
    pub parent: Vec<Option<usize>>,
    /// Birth times, increasing; the ancestor is born at 0.
    pub birth: Vec<f64>,
    /// Σ log ξ along the ancestry; −∞ once a zero echo occurs.
    pub position: Vec<f64>,
    /// Current time of the clock.
    pub clock: f64,
}

impl BrwState {
    pub fn len(&self) -> usize {
        self.birth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.birth.is_empty()
    }

    /// Number of particles alive at time s <= clock.
    pub fn count_at(&self, s: f64) -> usize {
        self.birth.partition_point(|&b| b <= s)
    }

    /// Position at time s of the ancestor of particle i alive at s.
    pub fn ancestral_position(&self, mut i: usize, s: f64) -> f64 {
        while self.birth[i] > s {
            i = self.parent[i].expect("the ancestor is born at time 0");
        }
        self.position[i]
    }

    pub fn csv_rows(&self) -> impl Iterator<Item = String> + '_ {
        (0..self.len()).map(move |i| {
            let parent = self.parent[i].map(|p| (p + 1).to_string()).unwrap_or_default();
            format!("{},{},{},{}", i + 1, parent, fmt_f64(self.birth[i]), fmt_f64(self.position[i]))
        })
    }

    pub fn to_csv(&self) -> String {
        csv_string(PARTICLE_HEADER, self.csv_rows())
    }

    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        write_csv(path, PARTICLE_HEADER, self.csv_rows())
    }
}

pub const PARTICLE_HEADER: &str = "index,parent,birth_time,position";

pub fn simulate_brw(law: &EchoLaw, horizon: Horizon, tape: &RandomTape) -> Result<BrwState> {
    let expected = match horizon {
        Horizon::Time(t) => {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::InvalidParameter(format!("horizon time must be finite and >= 0, got {t}")));
            }
            t.exp()
        }
        Horizon::Particles(n) => {
            if n == 0 {
                return Err(Error::InvalidParameter("particle horizon must be >= 1".into()));
            }
            n as f64
        }
    };
    if expected > PARTICLE_GUARD {
        return Err(Error::HorizonTooLarge {
            expected,
            limit: PARTICLE_GUARD,
        });
    }
    let mut clock_rng = tape.rng(Slot::Clock);
    let mut parent_rng = tape.rng(Slot::Parent);
    let mut echo_rng = tape.rng(Slot::Echo);
    let cap = expected.ceil() as usize + 1;
    let mut st = BrwState {
        parent: Vec::with_capacity(cap),
        birth: Vec::with_capacity(cap),
        position: Vec::with_capacity(cap),
        clock: 0.0,
    };
    st.parent.push(None);
    st.birth.push(0.0);
    st.position.push(0.0);
    loop {
        let k = st.len();
        if let Horizon::Particles(n) = horizon {
            if k >= n {
                break;
            }
        }
        let e: f64 = clock_rng.sample(Exp1);
        let next = st.clock + e / k as f64;
        if let Horizon::Time(t) = horizon {
            if next > t {
                st.clock = t;
                break;
            }
        }
        let par = parent_rng.random_range(0..k);
        let xi = law.sample(&mut echo_rng);
        let step = if xi > 0.0 { xi.ln() } else { f64::NEG_INFINITY };
        st.parent.push(Some(par));
        st.birth.push(next);
        st.position.push(st.position[par] + step);
        st.clock = next;
    }
    Ok(st)
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.filter(|x| *x > f64::NEG_INFINITY).collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// ln Σ^(θ)_s = ln Σ_{x ∈ Y_s} e^{θx}.
pub fn ln_sigma_at(state: &BrwState, theta: f64, s: f64) -> f64 {
    let k = state.count_at(s);
    log_sum_exp(state.position[..k].iter().map(|&x| theta * x))
}

/// Σ^(θ) at the current clock.
pub fn sigma(state: &BrwState, theta: f64) -> f64 {
    ln_sigma_at(state, theta, state.clock).exp()
}

/// W^(θ)_s = e^{−m_θ s} Σ^(θ)_s at each checkpoint (<= clock).
pub fn w_process(state: &BrwState, law: &EchoLaw, theta: f64, checkpoints: &[f64]) -> Result<Vec<f64>> {
    let ln_m = law.ln_moment(theta)?;
    if !ln_m.is_finite() {
        return Err(Error::OutOfMomentDomain(theta));
    }
    let m = ln_m.exp();
    checkpoints
        .iter()
        .map(|&s| {
            if s > state.clock + 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "checkpoint {s} lies beyond the simulated horizon {}",
                    state.clock
                )));
            }
            Ok((ln_sigma_at(state, theta, s) - m * s).exp())
        })
        .collect()
}

/// Σ^(θ) just after each birth: entry n−1 is Σ_{x ∈ Y_{τ_{n−1}}} e^{θx}, the
/// sum over the first n particles.
pub fn embedded_walk(state: &BrwState, theta: f64) -> Vec<f64> {
    let mut acc = 0.0;
    state
        .position
        .iter()
        .map(|&x| {
            if x > f64::NEG_INFINITY {
                acc += (theta * x).exp();
            }
            acc
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TiltMode {
    /// Sample jumps from the tilted law; discrete echo laws only.
    Exact,
    /// Sample jumps from the base law and carry the weight Π ξ^θ / m_θ.
    Weighted,
}

/// A path of the compound Poisson spine on [0, t].
#[derive(Debug, Clone, PartialEq)]
pub struct SpineProcess {
    pub intensity: f64,
    pub horizon: f64,
    pub jump_times: Vec<f64>,
    pub jumps: Vec<f64>,
    /// Importance weight; 1 in exact mode.
    pub weight: f64,
}

impl SpineProcess {
    pub fn position_at(&self, s: f64) -> f64 {
        self.jump_times
            .iter()
            .zip(&self.jumps)
            .take_while(|(t, _)| **t <= s)
            .map(|(_, j)| j)
            .sum()
    }

    pub fn endpoint(&self) -> f64 {
        self.jumps.iter().sum()
    }
}

/// Tilted jump law of log ξ: atoms (log v, w v^θ / m_θ) over v > 0.
pub fn tilted_jump_atoms(law: &EchoLaw, theta: f64) -> Result<Vec<(f64, f64)>> {
    let atoms = law.atoms().ok_or(Error::TiltingUnavailable)?;
    let m = law.moment(theta)?;
    Ok(atoms
        .into_iter()
        .filter(|a| a.0 > 0.0)
        .map(|(v, w)| (v.ln(), w * v.powf(theta) / m))
        .collect())
}

pub fn spine_sample(law: &EchoLaw, theta: f64, t: f64, mode: TiltMode, tape: &RandomTape) -> Result<SpineProcess> {
    let m = law.moment(theta)?;
    if !m.is_finite() {
        return Err(Error::OutOfMomentDomain(theta));
    }
    let atoms = match mode {
        TiltMode::Exact => Some(tilted_jump_atoms(law, theta)?),
        TiltMode::Weighted => None,
    };
    let mut count_rng = tape.rng(Slot::Clock);
    let mut time_rng = tape.rng(Slot::Uniform);
    let mut jump_rng = tape.rng(Slot::Echo);
    let mean = m * t;
    let count = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .sample(&mut count_rng) as usize
    } else {
        0
    };
    let mut jump_times: Vec<f64> = (0..count).map(|_| t * time_rng.random::<f64>()).collect();
    jump_times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    let mut jumps = Vec::with_capacity(count);
    let mut weight = 1.0;
    for _ in 0..count {
        match &atoms {
            Some(a) => {
                let u: f64 = jump_rng.random();
                let mut acc = 0.0;
                let mut pick = a[a.len() - 1].0;
                for &(x, w) in a {
                    acc += w;
                    if u < acc {
                        pick = x;
                        break;
                    }
                }
                jumps.push(pick);
            }
            None => {
                let xi = law.sample(&mut jump_rng);
                if xi > 0.0 {
                    weight *= xi.powf(theta) / m;
                    jumps.push(xi.ln());
                } else {
                    weight = 0.0;
                    jumps.push(0.0);
                }
            }
        }
    }
    Ok(SpineProcess {
        intensity: m,
        horizon: t,
        jump_times,
        jumps,
        weight,
    })
}

/// Path functionals for the many-to-one comparison. Paths are evaluated at
/// the horizon t and, for the two-time variants, also at an earlier time s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Functional {
    One,
    /// e^{a x(t)}.
    ExpEndpoint { a: f64 },
    /// 1{x(t) > 0}.
    EndpointPositive,
    /// 1{x(s) > 0 and x(t) > 0}.
    BothPositive { s: f64 },
    /// e^{a x(s) + b x(t)}.
    TwoTimeExp { s: f64, a: f64, b: f64 },
}

impl Functional {
    fn eval(&self, at_s: impl Fn(f64) -> f64, xt: f64) -> f64 {
        let e = |x: f64| if x == f64::NEG_INFINITY { 0.0 } else { x.exp() };
        match *self {
            Functional::One => 1.0,
            Functional::ExpEndpoint { a } => e(a * xt),
            Functional::EndpointPositive => f64::from(u8::from(xt > 0.0)),
            Functional::BothPositive { s } => f64::from(u8::from(at_s(s) > 0.0 && xt > 0.0)),
            Functional::TwoTimeExp { s, a, b } => {
                let xs = at_s(s);
                if xs == f64::NEG_INFINITY || xt == f64::NEG_INFINITY {
                    0.0
                } else {
                    (a * xs + b * xt).exp()
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManyToOne {
    pub lhs: MeanSe,
    pub rhs: MeanSe,
    pub pooled_se: f64,
}

impl ManyToOne {
    /// |lhs − rhs| in units of the pooled standard error.
    pub fn z(&self) -> f64 {
        if self.pooled_se == 0.0 {
            if self.lhs.mean == self.rhs.mean {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.lhs.mean - self.rhs.mean).abs() / self.pooled_se
        }
    }
}

/// Monte Carlo of E Σ_{x ∈ Y_t} f(x(·)) against the spine expectation
/// E[e^{−θP(t) + m_θ t} f(P(·))], each from `runs` independent draws.
pub fn many_to_one_check(
    law: &EchoLaw,
    theta: f64,
    t: f64,
    f: Functional,
    runs: usize,
    mode: TiltMode,
    tape: &RandomTape,
) -> Result<ManyToOne> {
    let m = law.moment(theta)?;
    let left_root = tape.derive("many-to-one-lhs");
    let right_root = tape.derive("many-to-one-rhs");
    let lhs: Vec<f64> = (0..runs as u64)
        .into_par_iter()
        .map(|j| -> Result<f64> {
            let st = simulate_brw(law, Horizon::Time(t), &left_root.child(j))?;
            Ok((0..st.len())
                .map(|i| f.eval(|s| st.ancestral_position(i, s), st.position[i]))
                .sum())
        })
        .collect::<Result<_>>()?;
    let rhs: Vec<f64> = (0..runs as u64)
        .into_par_iter()
        .map(|j| -> Result<f64> {
            let sp = spine_sample(law, theta, t, mode, &right_root.child(j))?;
            if sp.weight == 0.0 {
                return Ok(0.0);
            }
            let pt = sp.endpoint();
            let v = f.eval(|s| sp.position_at(s), pt);
            Ok(sp.weight * (-theta * pt + m * t).exp() * v)
        })
        .collect::<Result<_>>()?;
    let lhs = mean_and_se(&lhs);
    let rhs = mean_and_se(&rhs);
    Ok(ManyToOne {
        lhs,
        rhs,
        pooled_se: (lhs.se * lhs.se + rhs.se * rhs.se).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law(s: &str) -> EchoLaw {
        s.parse().unwrap()
    }

    #[test]
    fn unit_echo_positions_are_zero() {
        let st = simulate_brw(&law("const:1"), Horizon::Time(3.0), &RandomTape::new(1, 0)).unwrap();
        assert!(st.position.iter().all(|&x| x == 0.0));
        assert!((sigma(&st, 1.0) - st.len() as f64).abs() < 1e-9);
        let w = embedded_walk(&st, 1.0);
        for (i, v) in w.iter().enumerate() {
            assert!((v - (i + 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn single_particle_sigma() {
        let st = simulate_brw(&law("const:2"), Horizon::Particles(1), &RandomTape::new(1, 0)).unwrap();
        assert_eq!(sigma(&st, 1.0), 1.0);
        assert_eq!(w_process(&st, &law("const:2"), 1.0, &[0.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn births_are_ordered_and_parents_earlier() {
        let st = simulate_brw(&law("exp:1"), Horizon::Particles(500), &RandomTape::new(2, 0)).unwrap();
        assert_eq!(st.len(), 500);
        for i in 1..st.len() {
            assert!(st.birth[i] > st.birth[i - 1]);
            assert!(st.parent[i].unwrap() < i);
        }
        assert_eq!(st.clock, st.birth[499]);
    }

    #[test]
    fn horizon_guard() {
        let r = simulate_brw(&law("const:1"), Horizon::Time(20.0), &RandomTape::new(1, 0));
        assert!(matches!(r, Err(Error::HorizonTooLarge { .. })));
    }

    #[test]
    fn spine_examples() {
        let sp = spine_sample(&law("const:3"), 1.0, 2.0, TiltMode::Exact, &RandomTape::new(1, 0)).unwrap();
        assert!(sp.jumps.iter().all(|&j| (j - 3f64.ln()).abs() < 1e-15));
        assert_eq!(sp.intensity, 3.0);
        let b = tilted_jump_atoms(&law("bernoulli:0.4"), 1.0).unwrap();
        assert_eq!(b, vec![(0.0, 1.0)]);
        let two = tilted_jump_atoms(&law("discrete:0.5@0.5,2@0.5"), 1.0).unwrap();
        assert!((two[0].1 - 0.2).abs() < 1e-15 && (two[1].1 - 0.8).abs() < 1e-15);
        assert!(matches!(
            spine_sample(&law("exp:1"), 1.0, 1.0, TiltMode::Exact, &RandomTape::new(1, 0)),
            Err(Error::TiltingUnavailable)
        ));
    }

    #[test]
    fn two_time_paths() {
        let st = simulate_brw(&law("const:2"), Horizon::Time(2.0), &RandomTape::new(4, 0)).unwrap();
        for i in 0..st.len() {
            assert_eq!(st.ancestral_position(i, st.clock), st.position[i]);
            let x0 = st.ancestral_position(i, 0.0);
            assert_eq!(x0, 0.0);
        }
    }
}
