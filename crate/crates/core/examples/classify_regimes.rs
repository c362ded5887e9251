//! Regime, uniform integrability and the asymptotic constant of E S̃_n for a
//! handful of parameter choices.
//!
//!     cargo run --example classify_regimes

use echoed_walks::laws::classify;
use echoed_walks::{Result, WalkParams};

fn main() -> Result<()> {
    let grid = [
        (0.8, "const:2", "const:1"),
        (0.5, "const:1", "const:1"),
        (0.5, "discrete:1@0.5,3@0.5", "const:1"),
        (1.0, "const:3", "const:1"),
        (0.9, "exp:1", "normal:0,1"),
        (0.6, "lognormal:0,0.5", "rademacher"),
    ];
    println!("{:>4} {:>22} {:>11} {:>7} {:>14} {:>4} {:>9} {:>9}", "p", "echo", "spin", "p*m1", "regime", "ui", "exponent", "constant");
    for (p, echo, spin) in grid {
        let params = WalkParams::new(p, echo.parse()?, spin.parse()?)?;
        let r = classify(&params)?;
        println!(
            "{p:>4} {echo:>22} {spin:>11} {:>7.3} {:>14} {:>4} {:>9.3} {:>9.4}{}",
            r.pm1,
            format!("{:?}", r.regime),
            r.ui_holds,
            r.scaling_exponent,
            r.limit_constant,
            if r.log_correction { " (x ln n)" } else { "" }
        );
    }
    Ok(())
}
