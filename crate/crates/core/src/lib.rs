//! Random walks with echoed steps.
//!
//! At step n the walk either draws a fresh spin X_n (probability 1−p) or
//! repeats a uniformly chosen earlier increment multiplied by an independent
//! echo factor ξ_n (probability p). The crate simulates the process through
//! its direct recursion, its percolated random recursive tree and the
//! embedded continuous-time branching random walk, and evaluates the closed
//! forms that the simulations are checked against.

pub mod analytic;
pub mod branching;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod io;
pub mod laws;
pub mod limits;
pub mod quad;
pub mod special;
pub mod stats;
pub mod tape;
pub mod tree;
pub mod urn;
pub mod verify;
pub mod walk;

pub use error::{Error, Result};
pub use laws::{EchoLaw, Regime, RegimeReport, SpinLaw, WalkParams};
pub use tape::{RandomTape, Slot};
