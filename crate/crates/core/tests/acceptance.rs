//! Acceptance criteria C1..C11 at full budget, one PASS/FAIL line each.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use echoed_walks::verify::{criterion, Budget, SUITES};

const SEED: u64 = 7;

#[test]
fn acceptance_criteria() {
    let mut failed = Vec::new();
    for (_, id) in SUITES {
        let rep = criterion(id, SEED, Budget::FULL).expect("criterion runs");
        println!("{rep}");
        if !rep.pass {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
