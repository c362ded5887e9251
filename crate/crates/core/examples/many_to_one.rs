//! Both sides of the many-to-one formula by Monte Carlo: particles of the
//! branching walk against the tilted compound-Poisson spine.
//!
//!     cargo run --release --example many_to_one

use echoed_walks::branching::{many_to_one_check, Functional, TiltMode};
use echoed_walks::{EchoLaw, RandomTape, Result};

fn main() -> Result<()> {
    let law: EchoLaw = "discrete:0.5@0.5,2@0.5".parse()?;
    let fs = [
        ("1", Functional::One),
        ("exp(x_t)", Functional::ExpEndpoint { a: 1.0 }),
        ("x_t > 0", Functional::EndpointPositive),
        ("x_1 > 0, x_t > 0", Functional::BothPositive { s: 1.0 }),
    ];
    for (name, f) in fs {
        let r = many_to_one_check(&law, 1.0, 3.0, f, 20_000, TiltMode::Exact, &RandomTape::new(3, 0))?;
        println!(
            "{name:>18}: particles {:.4} +- {:.4}   spine {:.4} +- {:.4}   z = {:.2}",
            r.lhs.mean, r.lhs.se, r.rhs.mean, r.rhs.se, r.z()
        );
    }
    // a continuous law needs importance weights instead of exact tilting
    let law: EchoLaw = "uniform:0,2".parse()?;
    let r = many_to_one_check(&law, 1.0, 2.0, Functional::EndpointPositive, 20_000, TiltMode::Weighted, &RandomTape::new(3, 0))?;
    println!("uniform:0,2 weighted: {:.4} vs {:.4} (z = {:.2})", r.lhs.mean, r.rhs.mean, r.z());
    Ok(())
}
