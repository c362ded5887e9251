//! Population dynamics for the limit law L of the pure-echo walk, compared
//! with its exact moments and checked through the characteristic-function
//! form of the fixed-point equation.
//!
//!     cargo run --release --example fixed_point_pool

use echoed_walks::analytic::l_moments;
use echoed_walks::limits::{ecf_residual, fixpoint_pool, linspace, FixpointOptions};
use echoed_walks::{EchoLaw, RandomTape, Result};

fn main() -> Result<()> {
    let opts = FixpointOptions { size: 50_000, generations: 100, renormalize: true };
    for echo in ["bernoulli:0.5", "uniform:0,2", "discrete:0.5@0.5,1.5@0.5"] {
        let law: EchoLaw = echo.parse()?;
        let pool = fixpoint_pool(&law, opts, &RandomTape::new(1, 0))?;
        let exact = l_moments(&law, 3)?;
        print!("{echo:>26}:");
        for k in 1..=3 {
            let m = pool.moment(k as i32);
            print!("  E L^{k} = {:.4} ({:.4})", m.mean, exact[k - 1]);
        }
        let r = ecf_residual(&pool, &law, &linspace(-5.0, 5.0, 21), 20_000, &RandomTape::new(2, 0));
        println!("  ecf residual {r:.4}");
    }
    let pool = fixpoint_pool(&"const:3".parse()?, opts, &RandomTape::new(1, 0))?;
    println!("const:3 degenerate = {}", pool.degenerate);
    Ok(())
}
