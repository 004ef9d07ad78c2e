//! Shared fixtures for the criterion benches.

use nsb_core::{gen_random, NsbProblem, RandomProblemConfig};

/// Random equal-prior problem with the default noise range.
pub fn random_problem(inputs: usize, faults: usize, seed: u64) -> NsbProblem {
    gen_random(&RandomProblemConfig::new(inputs, faults, seed)).expect("valid random problem")
}
