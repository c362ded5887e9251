//! The memory tree: a uniform random recursive tree whose edge k carries the
//! echo factor ξ_k and is kept with probability p (ε_k = 1).
//!
//! Vertices are labelled 1..=n in the public API; storage is 0-based.

use std::path::Path;

use crate::error::Result;
use crate::io::{csv_string, fmt_f64, write_csv};
use crate::laws::WalkParams;
use crate::tape::RandomTape;
use crate::walk::{StepSource, Trajectory};

pub use crate::analytic::expected_subtree_moment;

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryTree {
    /// 0-based parent of each vertex; `None` for the root.
    pub parent: Vec<Option<usize>>,
    /// ξ_k on the edge into vertex k (unused for the root, stored as NaN).
    pub edge_weight: Vec<f64>,
    /// ε_k: the edge into k is kept. The root is never "retained".
    pub retained: Vec<bool>,
    /// ω(k) = (1−ε_k) + ε_k ξ_k ω(parent(k)), ω(1) = 1.
    pub omega: Vec<f64>,
    /// ln ω(k), −∞ for zero weights.
    pub log_omega: Vec<f64>,
}

impl MemoryTree {
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Σ_k ω(k)^θ over the whole tree, via log-weights.
    pub fn power_sum(&self, theta: f64) -> f64 {
        self.log_omega
            .iter()
            .map(|&l| if l == f64::NEG_INFINITY { 0.0 } else { (theta * l).exp() })
            .sum()
    }

    pub fn csv_rows<'a>(&'a self, sub: &'a SubtreeWeights) -> impl Iterator<Item = String> + 'a {
        (0..self.len()).map(move |k| match self.parent[k] {
            None => format!(
                "{},,,,{},{}",
                k + 1,
                fmt_f64(self.omega[k]),
                sub.component_of[k] + 1
            ),
            Some(par) => format!(
                "{},{},{},{},{},{}",
                k + 1,
                par + 1,
                fmt_f64(self.edge_weight[k]),
                u8::from(self.retained[k]),
                fmt_f64(self.omega[k]),
                sub.component_of[k] + 1
            ),
        })
    }

    pub fn to_csv(&self) -> String {
        let sub = subtree_weights(self);
        csv_string(TREE_HEADER, self.csv_rows(&sub))
    }

    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let sub = subtree_weights(self);
        write_csv(path, TREE_HEADER, self.csv_rows(&sub))
    }
}

pub const TREE_HEADER: &str = "vertex,parent,edge_weight,retained,vertex_weight,component_root";

/// Grow the tree with the draws [`crate::walk::simulate`] uses on the same tape.
pub fn grow(params: &WalkParams, n: usize, tape: &RandomTape) -> MemoryTree {
    let mut t = MemoryTree {
        parent: Vec::with_capacity(n),
        edge_weight: Vec::with_capacity(n),
        retained: Vec::with_capacity(n),
        omega: Vec::with_capacity(n),
        log_omega: Vec::with_capacity(n),
    };
    if n == 0 {
        return t;
    }
    let mut src = StepSource::new(params, tape);
    t.parent.push(None);
    t.edge_weight.push(f64::NAN);
    t.retained.push(false);
    t.omega.push(1.0);
    t.log_omega.push(0.0);
    for k in 2..=n {
        let d = src.step(k);
        t.parent.push(Some(d.parent));
        t.edge_weight.push(d.xi);
        t.retained.push(d.echo);
        if d.echo {
            t.omega.push(d.xi * t.omega[d.parent]);
            t.log_omega.push(if d.xi > 0.0 {
                d.xi.ln() + t.log_omega[d.parent]
            } else {
                f64::NEG_INFINITY
            });
        } else {
            t.omega.push(1.0);
            t.log_omega.push(0.0);
        }
    }
    t
}

/// Percolation components and their weights ‖T_r(n)‖.
#[derive(Debug, Clone, PartialEq)]
pub struct SubtreeWeights {
    /// 0-based roots: vertex 0 and every vertex whose incoming edge is cut.
    pub roots: Vec<usize>,
    /// ‖T_r(n)‖ indexed by vertex; zero for non-roots.
    pub weight: Vec<f64>,
    /// Number of vertices in the component, indexed by root.
    pub size: Vec<usize>,
    /// 0-based root of each vertex's component.
    pub component_of: Vec<usize>,
}

pub fn subtree_weights(tree: &MemoryTree) -> SubtreeWeights {
    let n = tree.len();
    let mut component_of = Vec::with_capacity(n);
    let mut weight = vec![0.0; n];
    let mut size = vec![0usize; n];
    let mut roots = Vec::new();
    for k in 0..n {
        let c = match tree.parent[k] {
            Some(par) if tree.retained[k] => component_of[par],
            _ => {
                roots.push(k);
                k
            }
        };
        component_of.push(c);
        weight[c] += tree.omega[k];
        size[c] += 1;
    }
    SubtreeWeights {
        roots,
        weight,
        size,
        component_of,
    }
}

/// Positions S̃_m = Σ_r X_r ‖T_r(m)‖ for every prefix m.
///
/// Vertex m joins the component of its root c(m), raising ‖T_{c(m)}‖ by ω(m),
/// so S̃ grows by X_{c(m)} ω(m) at step m.
pub fn reconstruct_walk(tree: &MemoryTree, spins: &[f64]) -> Trajectory {
    let n = tree.len();
    assert!(spins.len() >= n, "need one spin per vertex");
    let mut component_of: Vec<usize> = Vec::with_capacity(n);
    let mut inc = Vec::with_capacity(n);
    for k in 0..n {
        let c = match tree.parent[k] {
            Some(par) if tree.retained[k] => component_of[par],
            _ => k,
        };
        component_of.push(c);
        inc.push(spins[c] * tree.omega[k]);
    }
    Trajectory::from_increments(inc)
}
