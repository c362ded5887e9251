//! Growth exponent of E|S̃_n| as p m1 crosses 1, fitted on a log grid.
//!
//!     cargo run --release --example phase_transition

use echoed_walks::ensemble::{rate_estimate, run, StatisticKind};
use echoed_walks::laws::classify;
use echoed_walks::{RandomTape, Result, WalkParams};

fn main() -> Result<()> {
    let grid = [32, 128, 512, 2048, 8192];
    println!("{:>5} {:>7} {:>9} {:>9}", "p", "p*m1", "expected", "fitted");
    for p in [0.3, 0.5, 0.7, 0.9, 1.0] {
        let params = WalkParams::new(p, "const:1.5".parse()?, "const:1".parse()?)?;
        let r = classify(&params)?;
        let s = run(&params, StatisticKind::Raw, &grid, 500, &RandomTape::new(4, 0))?;
        let est = rate_estimate(&s)?;
        println!("{p:>5} {:>7.3} {:>9.3} {:>9.3}{}", r.pm1, r.scaling_exponent, est.slope, if r.log_correction { "  (log)" } else { "" });
    }
    Ok(())
}
