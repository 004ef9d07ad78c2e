//! Noisy single-pattern boolean (NSB) fault detection.
//!
//! Each fault has one noise-free ±1 pattern of instrument readings, and each
//! instrument flips independently with a fault-specific probability of at
//! most one half. This crate provides:
//!
//! - [`problem`]: the problem model, the built-in lemonade benchmark and a
//!   sampler for the generative model;
//! - [`oracle`]: exact Bayes decisions and expected utility by enumeration;
//! - [`machine`]: winner-take-all linear machines, the closed-form
//!   Bayes-optimal machine and its inverse;
//! - [`pocket`]: the pocket training algorithm;
//! - [`experiment`]: pocket-versus-Bayes comparisons and random problems;
//! - [`format`]: the `nsb-problem v1` and `lmachine v1` text formats.

pub mod error;
pub mod experiment;
pub mod format;
pub mod machine;
pub mod oracle;
pub mod pocket;
pub mod problem;
pub mod seeding;

pub use error::{NsbError, Result};
pub use experiment::{compare, compare_seeds, gen_random, ComparisonReport, PriorMode, RandomProblemConfig};
pub use format::{parse_machine, parse_problem, serialize_machine, serialize_problem};
pub use machine::{bayes_network, choose_k, network_to_nsb, Inversion, LinearMachine};
pub use oracle::{
    bayes_decide, exact_expected_utility, likelihood, marginal_likelihood, monte_carlo_utility, BayesDecider, Decider,
    UtilityMethod, UtilityReport,
};
pub use pocket::{accuracy_on, perceptron_step, train, TrainerConfig, TrainingRun, TrainingSource};
pub use problem::{fold_priors, lemonade, sample_example, NsbProblem, Reading, TrainingExample, Violation};
