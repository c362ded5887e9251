//! One path of the walk, written as CSV, next to the exact mean E S̃_n.
//!
//!     cargo run --example simulate_walk -- [n] [seed]

use echoed_walks::analytic::expected_position;
use echoed_walks::walk::simulate;
use echoed_walks::{RandomTape, Result, WalkParams};

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(Ok(1000), |s| s.parse()).expect("n");
    let seed: u64 = args.next().map_or(Ok(1), |s| s.parse()).expect("seed");
    let params = WalkParams::new(0.8, "const:2".parse()?, "const:1".parse()?)?;
    let path = simulate(&params, n, &RandomTape::new(seed, 0));

    let out = std::env::temp_dir().join("echoed_walk_path.csv");
    path.write_csv(&out)?;
    println!("wrote {} steps to {}", n, out.display());
    for k in [10, 100, n] {
        if k <= n {
            println!("n = {k:>6}: S = {:>14.3}   E S = {:>14.3}", path.position(k), expected_position(&params, k as u64));
        }
    }
    Ok(())
}
