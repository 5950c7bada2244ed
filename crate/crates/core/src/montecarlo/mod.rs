//! Frozen-coefficient Markov chains and Feynman–Kac estimators.
//!
//! Variance convention: the symbol `½|p|²` is standard Brownian motion, with
//! increment variance `t/n` per step. The symbol `a(q)|p|²` has frozen
//! variance `2 a(q) t/n`.

mod chain;
mod estimate;
mod plane;
mod stats;

pub use chain::{simulate_chain, ChainPath};
pub use estimate::{
    expectation_estimate, girsanov_estimate, girsanov_weight, shard_rng, write_estimates_csv,
    McEstimate, McRecord, MIN_PATHS, SHARD_PATHS,
};
pub use plane::{expectation_estimate_2d, positive_stable, simulate_chain_2d, ChainPath2};
pub use stats::{ks_coefficient, ks_one_sample, ks_two_sample, KsTest};
