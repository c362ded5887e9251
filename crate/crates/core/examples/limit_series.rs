//! The supercritical limit M = Σ X_r L_r built from a fixed-point pool,
//! against direct simulation of S̃_n / n^{pm1}.
//!
//!     cargo run --release --example limit_series

use echoed_walks::analytic::asymptotic_mean_constant;
use echoed_walks::ensemble::{run, StatisticKind};
use echoed_walks::limits::{fixpoint_pool, series_limit_pool, FixpointOptions};
use echoed_walks::stats::{ks_two_sample, mean_and_se};
use echoed_walks::{RandomTape, Result, WalkParams};

fn main() -> Result<()> {
    let params = WalkParams::new(0.8, "const:2".parse()?, "const:1".parse()?)?;
    let base = fixpoint_pool(
        &params.thinned_echo(),
        FixpointOptions { size: 100_000, generations: 100, renormalize: true },
        &RandomTape::new(1, 0),
    )?;
    let series = series_limit_pool(&params, 2000, 10_000, &base, &RandomTape::new(2, 0))?;
    let ms = mean_and_se(&series.pool.samples);
    let c = asymptotic_mean_constant(&params)?.constant;
    println!(
        "series mean {:.4} +- {:.4} + tail {:.4} = {:.4}; constant {c:.4}",
        ms.mean,
        ms.se,
        series.tail_mean,
        ms.mean + series.tail_mean
    );
    let direct = run(&params, StatisticKind::Scaled, &[4096], 10_000, &RandomTape::new(3, 0))?;
    let ks = ks_two_sample(&series.pool.samples, &direct.values[0], 0.01)?;
    println!("KS series vs S_4096/4096^1.6: D = {:.4}, threshold {:.4}", ks.statistic, ks.threshold);
    Ok(())
}
