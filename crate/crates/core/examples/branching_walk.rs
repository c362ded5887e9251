//! The continuous-time branching random walk, its additive martingale W^(θ)
//! and the degenerate case where W tends to zero while its mean stays 1.
//!
//!     cargo run --example branching_walk

use echoed_walks::branching::{simulate_brw, w_process, Horizon};
use echoed_walks::stats::{mean_and_se, quantile};
use echoed_walks::{EchoLaw, RandomTape, Result};

fn main() -> Result<()> {
    let times = [2.0, 4.0, 6.0, 8.0];
    for echo in ["const:2", "bernoulli:0.5", "const:3"] {
        let law: EchoLaw = echo.parse()?;
        let runs = 4000;
        let mut w = vec![Vec::with_capacity(runs); times.len()];
        for j in 0..runs {
            let st = simulate_brw(&law, Horizon::Time(8.0), &RandomTape::new(2, j as u64))?;
            for (k, v) in w_process(&st, &law, 1.0, &times)?.into_iter().enumerate() {
                w[k].push(v);
            }
        }
        println!("xi = {echo}");
        for (k, t) in times.iter().enumerate() {
            let ms = mean_and_se(&w[k]);
            println!("  t = {t}: mean W = {:.3} +- {:.3}, median {:.3}", ms.mean, ms.se, quantile(&w[k], 0.5));
        }
    }
    Ok(())
}
