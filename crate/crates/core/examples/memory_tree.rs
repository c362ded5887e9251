//! Grow the memory tree on a tape, split it into percolation components and
//! rebuild the walk from component weights. The rebuilt path matches the
//! directly simulated one on the same tape.
//!
//!     cargo run --example memory_tree

use echoed_walks::tree::{grow, reconstruct_walk, subtree_weights};
use echoed_walks::walk::{simulate, spins};
use echoed_walks::{RandomTape, Result, WalkParams};

fn main() -> Result<()> {
    let params = WalkParams::new(0.7, "exp:1".parse()?, "normal:0,1".parse()?)?;
    let n = 2000;
    let tape = RandomTape::new(11, 0);

    let tree = grow(&params, n, &tape);
    let sub = subtree_weights(&tree);
    println!("{} vertices, {} components", tree.len(), sub.roots.len());
    let mut biggest: Vec<_> = sub.roots.iter().map(|&r| (sub.size[r], r + 1, sub.weight[r])).collect();
    biggest.sort_by(|a, b| b.0.cmp(&a.0));
    for (size, root, w) in biggest.iter().take(5) {
        println!("  root {root:>5}: {size:>5} vertices, weight {w:.4}");
    }

    let direct = simulate(&params, n, &tape);
    let rebuilt = reconstruct_walk(&tree, &spins(&params.spin, n, &tape));
    println!("S_n direct  = {:.12}", direct.position(n));
    println!("S_n rebuilt = {:.12}", rebuilt.position(n));
    println!("sum of omega^2 = {:.4}", tree.power_sum(2.0));
    Ok(())
}
