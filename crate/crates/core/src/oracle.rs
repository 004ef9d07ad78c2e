//! Exact Bayesian decisions and expected utility for NSB problems.
//!
//! Decision scores are `log P(G_i) + sum_j log P(V_j | G_i)` over the known
//! readings. A noise-free reading that disagrees with the pattern gives a
//! factor of exactly zero, i.e. a score of `-inf`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NsbError, Result};
use crate::problem::{sample_example, NsbProblem, Reading};

/// Default cap on `n` for exhaustive enumeration over `2^n` readings.
pub const DEFAULT_ENUMERATION_LIMIT: usize = 24;

/// Readings summed sequentially per block before the pairwise reduction.
const BLOCK_BITS: u32 = 12;

/// Anything that names a fault for a reading.
pub trait Decider: Sync {
    fn decide(&self, reading: &Reading) -> usize;

    /// Input width the decider expects, when it has one.
    fn inputs(&self) -> Option<usize> {
        None
    }
}

impl<F> Decider for F
where
    F: Fn(&Reading) -> usize + Sync,
{
    fn decide(&self, reading: &Reading) -> usize {
        self(reading)
    }
}

/// Precomputed log factors for the Bayes decision rule on one problem.
#[derive(Debug, Clone)]
pub struct BayesDecider {
    log_prior: Vec<f64>,
    /// `[i][j] = (log P(V_j = +1 | G_i), log P(V_j = -1 | G_i))`
    log_factor: Vec<Vec<(f64, f64)>>,
}

impl BayesDecider {
    pub fn new(problem: &NsbProblem) -> Self {
        let log_factor = problem
            .patterns()
            .iter()
            .zip(problem.noise())
            .map(|(pattern, noise)| {
                pattern
                    .iter()
                    .zip(noise)
                    .map(|(&a, &nz)| {
                        let (agree, disagree) = ((1.0 - nz).ln(), nz.ln());
                        if a == 1 {
                            (agree, disagree)
                        } else {
                            (disagree, agree)
                        }
                    })
                    .collect()
            })
            .collect();
        Self { log_prior: problem.priors().iter().map(|p| p.ln()).collect(), log_factor }
    }

    /// Builds the rule from raw priors without requiring them to be normalized.
    pub fn with_priors(problem: &NsbProblem, priors: &[f64]) -> Self {
        let mut d = Self::new(problem);
        d.log_prior = priors.iter().map(|p| p.ln()).collect();
        d
    }

    /// `log(P(V|G_i) P(G_i))` over the known entries of `reading`.
    pub fn log_score(&self, reading: &[i8], fault: usize) -> f64 {
        let mut s = self.log_prior[fault];
        for (&v, &(plus, minus)) in reading.iter().zip(&self.log_factor[fault]) {
            match v {
                1 => s += plus,
                -1 => s += minus,
                _ => {}
            }
        }
        s
    }

    pub fn log_scores(&self, reading: &Reading) -> Vec<f64> {
        (0..self.log_prior.len()).map(|i| self.log_score(reading.values(), i)).collect()
    }

    fn decide_values(&self, reading: &[i8]) -> usize {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for i in 0..self.log_prior.len() {
            let s = self.log_score(reading, i);
            if s > best_score {
                best = i;
                best_score = s;
            }
        }
        best
    }
}

impl Decider for BayesDecider {
    fn decide(&self, reading: &Reading) -> usize {
        self.decide_values(reading.values())
    }

    fn inputs(&self) -> Option<usize> {
        self.log_factor.first().map(Vec::len)
    }
}

fn check_width(problem: &NsbProblem, reading: &Reading) -> Result<()> {
    if reading.len() != problem.inputs() {
        return Err(NsbError::DimensionMismatch { expected: problem.inputs(), actual: reading.len() });
    }
    Ok(())
}

fn check_fault(problem: &NsbProblem, fault: usize) -> Result<()> {
    if fault >= problem.faults() {
        return Err(NsbError::InvalidInput(format!(
            "fault index {fault} out of range for {} faults",
            problem.faults()
        )));
    }
    Ok(())
}

/// `P(V | G_fault)` for a fully known reading.
pub fn likelihood(problem: &NsbProblem, reading: &Reading, fault: usize) -> Result<f64> {
    if !reading.is_fully_known() {
        return Err(NsbError::UnknownReading);
    }
    marginal_likelihood(problem, reading, fault)
}

/// `P(V | G_fault)` over the known entries only; unknown readings contribute 1.
pub fn marginal_likelihood(problem: &NsbProblem, reading: &Reading, fault: usize) -> Result<f64> {
    check_width(problem, reading)?;
    check_fault(problem, fault)?;
    Ok(reading
        .values()
        .iter()
        .zip(problem.pattern(fault))
        .zip(problem.noise_row(fault))
        .filter(|((&v, _), _)| v != 0)
        .map(|((&v, &a), &nz)| if v == a { 1.0 - nz } else { nz })
        .product())
}

/// Most probable fault given the known readings; ties go to the lowest index.
pub fn bayes_decide(problem: &NsbProblem, reading: &Reading) -> Result<usize> {
    check_width(problem, reading)?;
    Ok(BayesDecider::new(problem).decide(reading))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UtilityMethod {
    Exact,
    MonteCarlo,
}

/// Probability that a decider names the true fault.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    pub value: f64,
    /// `value * 1000`
    pub figure_of_merit: f64,
    pub method: UtilityMethod,
    pub stderr: f64,
    pub sample_count: u64,
}

impl UtilityReport {
    pub(crate) fn exact(value: f64) -> Self {
        Self { value, figure_of_merit: value * 1000.0, method: UtilityMethod::Exact, stderr: 0.0, sample_count: 0 }
    }

    pub(crate) fn monte_carlo(correct: u64, samples: u64) -> Self {
        let p = correct as f64 / samples as f64;
        Self {
            value: p,
            figure_of_merit: p * 1000.0,
            method: UtilityMethod::MonteCarlo,
            stderr: (p * (1.0 - p) / samples as f64).sqrt(),
            sample_count: samples,
        }
    }
}

/// Exact expected utility of `decider`: `sum_V P(V | G_d(V)) P(G_d(V))`
/// over all `2^n` fully known readings.
pub fn exact_expected_utility<D: Decider + ?Sized>(problem: &NsbProblem, decider: &D) -> Result<UtilityReport> {
    exact_expected_utility_with_limit(problem, decider, DEFAULT_ENUMERATION_LIMIT)
}

pub fn exact_expected_utility_with_limit<D: Decider + ?Sized>(
    problem: &NsbProblem,
    decider: &D,
    max_inputs: usize,
) -> Result<UtilityReport> {
    let n = problem.inputs();
    if n > max_inputs || n > 62 {
        return Err(NsbError::EnumerationGuard { inputs: n, limit: max_inputs.min(62) });
    }
    if let Some(width) = decider.inputs() {
        if width != n {
            return Err(NsbError::DimensionMismatch { expected: n, actual: width });
        }
    }
    let bayes = BayesDecider::new(problem);
    let faults = problem.faults();
    let total: u64 = 1 << n;
    let block = 1u64 << BLOCK_BITS.min(n as u32);
    let blocks = total / block;

    let partials: Vec<f64> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut reading = Reading::from_index(0, n);
            let mut sum = 0.0;
            for idx in b * block..(b + 1) * block {
                reading.set_from_index(idx);
                let d = decider.decide(&reading);
                assert!(d < faults, "decider returned fault {d} for a {faults}-fault problem");
                sum += bayes.log_score(reading.values(), d).exp();
            }
            sum
        })
        .collect();
    Ok(UtilityReport::exact(pairwise_sum(&partials)))
}

/// Fixed-shape pairwise reduction: the result depends only on the input order.
fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        len => {
            let (a, b) = xs.split_at(len / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Monte Carlo estimate of expected utility from `sample_count` draws of the
/// generative model, seeded with the evaluation stream of `seed`.
pub fn monte_carlo_utility<D: Decider + ?Sized>(
    problem: &NsbProblem,
    decider: &D,
    sample_count: u64,
    seed: u64,
) -> Result<UtilityReport> {
    let mut rng = crate::seeding::evaluation_rng(seed);
    monte_carlo_utility_with_rng(problem, decider, sample_count, &mut rng)
}

pub fn monte_carlo_utility_with_rng<D: Decider + ?Sized, R: Rng>(
    problem: &NsbProblem,
    decider: &D,
    sample_count: u64,
    rng: &mut R,
) -> Result<UtilityReport> {
    if sample_count == 0 {
        return Err(NsbError::InvalidInput("sample count must be at least 1".into()));
    }
    if let Some(width) = decider.inputs() {
        if width != problem.inputs() {
            return Err(NsbError::DimensionMismatch { expected: problem.inputs(), actual: width });
        }
    }
    let correct = (0..sample_count)
        .filter(|_| {
            let ex = sample_example(problem, rng);
            decider.decide(&ex.reading) == ex.fault
        })
        .count() as u64;
    Ok(UtilityReport::monte_carlo(correct, sample_count))
}
