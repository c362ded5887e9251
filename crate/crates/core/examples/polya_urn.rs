//! The subtree-size law Y(n, r) against urn simulation, and the urn
//! decomposition of the pure-echo walk against direct simulation.
//!
//!     cargo run --example polya_urn

use echoed_walks::stats::{chi_square, ks_two_sample};
use echoed_walks::tree::grow;
use echoed_walks::urn::{composite_sample, direct_sample, y_pmf};
use echoed_walks::{RandomTape, Result, WalkParams};

fn main() -> Result<()> {
    // Y(n, r): descendants of vertex r (itself included) in the genealogy of
    // the walk, which is a uniform random recursive tree whatever p is
    let (n, r) = (30u64, 4u64);
    let law = y_pmf(n, r)?;
    let mut counts = vec![0u64; law.pmf.len()];
    let runs = 20_000;
    let params = WalkParams::new(1.0, "const:1".parse()?, "const:1".parse()?)?;
    for j in 0..runs {
        let tree = grow(&params, n as usize, &RandomTape::new(5, j));
        // count descendants of vertex r (0-based r − 1)
        let mut inside = vec![false; n as usize];
        inside[r as usize - 1] = true;
        let mut size = 1;
        for k in r as usize..n as usize {
            if let Some(par) = tree.parent[k] {
                if inside[par] {
                    inside[k] = true;
                    size += 1;
                }
            }
        }
        counts[size - 1] += 1;
    }
    // pool the sparse upper tail into one cell
    let cut = 12;
    let mut c: Vec<u64> = counts[..cut].to_vec();
    c.push(counts[cut..].iter().sum());
    let mut pr: Vec<f64> = law.pmf[..cut].to_vec();
    pr.push(law.pmf[cut..].iter().sum());
    let chi = chi_square(&c, &pr);
    println!("Y({n},{r}): mean {:.4} (n/r = {:.4}), chi-square p-value {:.3}", law.mean(), n as f64 / r as f64, chi.p_value);

    for echo in ["const:2", "bernoulli:0.5", "exp:1"] {
        let params = WalkParams::new(1.0, echo.parse()?, "const:1".parse()?)?;
        let tape = RandomTape::new(9, 0);
        let a = composite_sample(&params, 64, 20_000, &tape)?;
        let b = direct_sample(&params, 64, 20_000, &tape);
        let ks = ks_two_sample(&a, &b, 0.01)?;
        println!("{echo:>14}: KS D = {:.4}, 1% threshold {:.4}, reject = {}", ks.statistic, ks.threshold, ks.reject);
    }
    Ok(())
}
