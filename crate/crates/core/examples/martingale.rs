//! The mean martingale M_n in each regime: its mean stays at zero while the
//! variance settles when the limit is square integrable.
//!
//!     cargo run --release --example martingale

use echoed_walks::ensemble::{martingale_diagnostic, variance_change_last_decade};
use echoed_walks::{RandomTape, Result, WalkParams};

fn main() -> Result<()> {
    let grid = [16, 64, 256, 410, 1024, 4096];
    for (p, echo, spin) in [(0.8, "const:2", "const:1"), (0.75, "const:1", "rademacher"), (1.0, "const:3", "const:1")] {
        let params = WalkParams::new(p, echo.parse()?, spin.parse()?)?;
        let pts = martingale_diagnostic(&params, &grid, 4000, &RandomTape::new(6, 0))?;
        println!("p = {p}, xi = {echo}, X = {spin}");
        for q in &pts {
            println!("  n = {:>5}: mean {:+.4} +- {:.4}  var {:.4}", q.checkpoint, q.mean, q.se, q.var);
        }
        if let Some(c) = variance_change_last_decade(&pts) {
            println!("  variance change over the last decade {:.1}%", 100.0 * c);
        }
    }
    Ok(())
}
