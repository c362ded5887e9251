//! Direct simulation of the increment recursion
//! X̃₁ = X₁, X̃_n = (1−ε_n) X_n + ε_n ξ_n X̃_{U[n]}.

use std::path::Path;

use rand::Rng;

use crate::error::Result;
use crate::io::{csv_string, fmt_f64, write_csv};
use crate::laws::{EchoLaw, SpinLaw, WalkParams};
use crate::tape::{RandomTape, TapeRng, WalkStreams};

/// The randomness consumed at one step n >= 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDraw {
    /// ε_n = 1: the step echoes a past increment.
    pub echo: bool,
    /// U[n] − 1, a 0-based index into the past increments.
    pub parent: usize,
    pub xi: f64,
    pub spin: f64,
}

/// Per-step draws in the fixed order (ε, U, ξ, X), each from its own stream.
///
/// All four are drawn at every step whatever ε turns out to be, so changing
/// p leaves the ξ and X sequences of a tape untouched.
pub struct StepSource<'a> {
    streams: WalkStreams,
    p: f64,
    echo: &'a EchoLaw,
    spin: &'a SpinLaw,
}

impl<'a> StepSource<'a> {
    pub fn new(params: &'a WalkParams, tape: &RandomTape) -> Self {
        StepSource {
            streams: WalkStreams::new(tape),
            p: params.p,
            echo: &params.echo,
            spin: &params.spin,
        }
    }

    /// X₁.
    pub fn first(&mut self) -> f64 {
        self.spin.sample(&mut self.streams.spin)
    }

    /// Draws for step `k` (1-based, k >= 2).
    pub fn step(&mut self, k: usize) -> StepDraw {
        debug_assert!(k >= 2);
        let echo = self.streams.epsilon.random::<f64>() < self.p;
        let parent = self.streams.parent.random_range(0..k - 1);
        let xi = self.echo.sample(&mut self.streams.echo);
        let spin = self.spin.sample(&mut self.streams.spin);
        StepDraw { echo, parent, xi, spin }
    }
}

/// Spins X₁..X_n as drawn by [`simulate`] on the same tape.
pub fn spins(spin: &SpinLaw, n: usize, tape: &RandomTape) -> Vec<f64> {
    let mut rng: TapeRng = WalkStreams::new(tape).spin;
    (0..n).map(|_| spin.sample(&mut rng)).collect()
}

/// Increments and positions of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub increments: Vec<f64>,
    pub positions: Vec<f64>,
}

impl Trajectory {
    /// Build positions from increments with compensated summation.
    pub fn from_increments(increments: Vec<f64>) -> Self {
        let mut positions = Vec::with_capacity(increments.len());
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for &x in &increments {
            // Neumaier's variant of Kahan summation
            let t = sum + x;
            if sum.abs() >= x.abs() {
                comp += (sum - t) + x;
            } else {
                comp += (x - t) + sum;
            }
            sum = t;
            positions.push(sum + comp);
        }
        Trajectory { increments, positions }
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    /// S̃_k for 1-based k.
    pub fn position(&self, k: usize) -> f64 {
        self.positions[k - 1]
    }

    pub fn csv_rows(&self) -> impl Iterator<Item = String> + '_ {
        self.increments
            .iter()
            .zip(&self.positions)
            .enumerate()
            .map(|(i, (x, s))| format!("{},{},{}", i + 1, fmt_f64(*x), fmt_f64(*s)))
    }

    pub fn to_csv(&self) -> String {
        csv_string(TRAJECTORY_HEADER, self.csv_rows())
    }

    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        write_csv(path, TRAJECTORY_HEADER, self.csv_rows())
    }
}

pub const TRAJECTORY_HEADER: &str = "step,increment,position";

/// Simulate n steps of the walk.
pub fn simulate(params: &WalkParams, n: usize, tape: &RandomTape) -> Trajectory {
    simulate_mapped(params, n, tape, |xi| xi)
}

/// Like [`simulate`] but every echo draw ξ_k is replaced by `map(ξ_k)`.
/// With `map = |x| x.powf(θ)` this couples the walk with echo law ξ^θ to the
/// walk with echo law ξ on the same tape.
pub fn simulate_mapped<F: Fn(f64) -> f64>(
    params: &WalkParams,
    n: usize,
    tape: &RandomTape,
    map: F,
) -> Trajectory {
    let mut inc = Vec::with_capacity(n);
    if n == 0 {
        return Trajectory::from_increments(inc);
    }
    let mut src = StepSource::new(params, tape);
    inc.push(src.first());
    for k in 2..=n {
        let d = src.step(k);
        let x = if d.echo { map(d.xi) * inc[d.parent] } else { d.spin };
        inc.push(x);
    }
    Trajectory::from_increments(inc)
}

/// Positions S̃_k at the given increasing 1-based checkpoints.
pub fn positions_at(params: &WalkParams, checkpoints: &[usize], tape: &RandomTape) -> Vec<f64> {
    let n = checkpoints.last().copied().unwrap_or(0);
    let t = simulate(params, n, tape);
    checkpoints.iter().map(|&k| t.position(k)).collect()
}

/// Ordinary random walk with the spins of [`simulate`] on the same tape.
pub fn simulate_orw(spin: &SpinLaw, n: usize, tape: &RandomTape) -> Trajectory {
    Trajectory::from_increments(spins(spin, n, tape))
}
