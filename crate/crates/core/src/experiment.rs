//! Network-versus-Bayes comparison runs and random NSB problem generation.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NsbError, Result};
use crate::machine::LinearMachine;
use crate::oracle::{exact_expected_utility, BayesDecider, Decider, UtilityReport};
use crate::pocket::{train, TrainerConfig, TrainingSource};
use crate::problem::{sample_example, NsbProblem, Reading};
use crate::seeding::{evaluation_rng, training_rng};

/// Outcome of one pocket-versus-Bayes evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub seed: u64,
    pub iterations: u64,
    pub sample_count: u64,
    /// `[network correct, network wrong] x [bayes correct, bayes wrong]`
    pub counts: [[u64; 2]; 2],
    /// Evaluation examples on which both deciders named the same fault.
    pub agreements: u64,
    pub agreement_rate: f64,
    pub bayes_utility: UtilityReport,
    pub network_utility: UtilityReport,
    pub exact_bayes_utility: UtilityReport,
    pub exact_network_utility: UtilityReport,
    /// `exact_network_utility / exact_bayes_utility`
    pub relative_performance: f64,
    #[serde(skip)]
    pub machine: Option<LinearMachine>,
}

/// Trains a pocket machine with `config` and scores it against the Bayes
/// rule on `sample_count` fresh examples from the evaluation stream of
/// `config.seed`, plus exact utilities by enumeration.
pub fn compare(problem: &NsbProblem, config: &TrainerConfig, sample_count: u64) -> Result<ComparisonReport> {
    if sample_count == 0 {
        return Err(NsbError::InvalidInput("sample count must be at least 1".into()));
    }
    let run = train(TrainingSource::Problem(problem), config)?;
    let machine = run.final_machine;
    let bayes = BayesDecider::new(problem);

    let mut rng = evaluation_rng(config.seed);
    let mut counts = [[0u64; 2]; 2];
    let mut agreements = 0u64;
    for _ in 0..sample_count {
        let ex = sample_example(problem, &mut rng);
        let net = machine.decide(&ex.reading);
        let bay = bayes.decide(&ex.reading);
        counts[usize::from(net != ex.fault)][usize::from(bay != ex.fault)] += 1;
        agreements += u64::from(net == bay);
    }
    let net_correct = counts[0][0] + counts[0][1];
    let bayes_correct = counts[0][0] + counts[1][0];

    let exact_bayes = exact_expected_utility(problem, &bayes)?;
    let exact_network = exact_expected_utility(problem, &machine)?;
    Ok(ComparisonReport {
        seed: config.seed,
        iterations: config.iterations,
        sample_count,
        counts,
        agreements,
        agreement_rate: agreements as f64 / sample_count as f64,
        bayes_utility: UtilityReport::monte_carlo(bayes_correct, sample_count),
        network_utility: UtilityReport::monte_carlo(net_correct, sample_count),
        relative_performance: exact_network.value / exact_bayes.value,
        exact_bayes_utility: exact_bayes,
        exact_network_utility: exact_network,
        machine: Some(machine),
    })
}

/// Runs [`compare`] for seeds `seed, seed + 1, ..., seed + runs - 1` in
/// parallel; reports come back in seed order.
pub fn compare_seeds(
    problem: &NsbProblem,
    config: &TrainerConfig,
    sample_count: u64,
    runs: u64,
) -> Result<Vec<ComparisonReport>> {
    if runs == 0 {
        return Err(NsbError::InvalidInput("at least one seed is required".into()));
    }
    (0..runs)
        .into_par_iter()
        .map(|k| {
            let cfg = TrainerConfig { seed: config.seed.wrapping_add(k), ..config.clone() };
            compare(problem, &cfg, sample_count)
        })
        .collect()
}

fn f4(x: f64) -> String {
    format!("{x:.4}")
}

impl ComparisonReport {
    /// Stable `(key, value)` pairs of the machine-readable report.
    pub fn key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            ("seed", self.seed.to_string()),
            ("iterations", self.iterations.to_string()),
            ("sample_count", self.sample_count.to_string()),
            ("network_correct_bayes_correct", self.counts[0][0].to_string()),
            ("network_correct_bayes_wrong", self.counts[0][1].to_string()),
            ("network_wrong_bayes_correct", self.counts[1][0].to_string()),
            ("network_wrong_bayes_wrong", self.counts[1][1].to_string()),
            ("agreements", self.agreements.to_string()),
            ("agreement_rate", f4(self.agreement_rate)),
            ("bayes_utility", f4(self.bayes_utility.value)),
            ("bayes_stderr", f4(self.bayes_utility.stderr)),
            ("network_utility", f4(self.network_utility.value)),
            ("network_stderr", f4(self.network_utility.stderr)),
            ("exact_bayes_utility", f4(self.exact_bayes_utility.value)),
            ("exact_network_utility", f4(self.exact_network_utility.value)),
            ("relative_performance", f4(self.relative_performance)),
        ]
    }

    /// Human-readable table.
    pub fn render(&self) -> String {
        let c = &self.counts;
        let mut out = String::new();
        let _ = writeln!(out, "seed {}  iterations {}  samples {}", self.seed, self.iterations, self.sample_count);
        let _ = writeln!(out, "{:<18}{:>15}{:>13}", "", "Bayes correct", "Bayes wrong");
        let _ = writeln!(out, "{:<18}{:>15}{:>13}", "Network correct", c[0][0], c[0][1]);
        let _ = writeln!(out, "{:<18}{:>15}{:>13}", "Network wrong", c[1][0], c[1][1]);
        let _ = writeln!(out, "agreement         {} ({})", self.agreements, f4(self.agreement_rate));
        let _ = writeln!(
            out,
            "sampled utility   bayes {} ± {}  network {} ± {}",
            f4(self.bayes_utility.value),
            f4(self.bayes_utility.stderr),
            f4(self.network_utility.value),
            f4(self.network_utility.stderr)
        );
        let _ = writeln!(
            out,
            "exact utility     bayes {}  network {}",
            f4(self.exact_bayes_utility.value),
            f4(self.exact_network_utility.value)
        );
        let _ = writeln!(out, "relative          {}", f4(self.relative_performance));
        out
    }
}

fn prefixed(reports: &[ComparisonReport]) -> Vec<(String, String)> {
    let mut out = Vec::new();
    if let [only] = reports {
        out.extend(only.key_values().into_iter().map(|(k, v)| (k.to_string(), v)));
        return out;
    }
    for (k, r) in reports.iter().enumerate() {
        out.extend(r.key_values().into_iter().map(|(key, v)| (format!("run{k}.{key}"), v)));
    }
    if let Some(best) = reports.iter().max_by(|a, b| a.relative_performance.total_cmp(&b.relative_performance)) {
        out.push(("best_seed".into(), best.seed.to_string()));
        out.push(("best_relative_performance".into(), f4(best.relative_performance)));
    }
    let mean = reports.iter().map(|r| r.relative_performance).sum::<f64>() / reports.len() as f64;
    out.push(("mean_relative_performance".into(), f4(mean)));
    out
}

/// `key = value` lines for one or more reports. Multiple reports get
/// `run<k>.` prefixes plus best/mean summary keys.
pub fn reports_to_key_values(reports: &[ComparisonReport]) -> String {
    prefixed(reports).into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

/// The same keys as [`reports_to_key_values`] as a flat JSON object.
pub fn reports_to_json(reports: &[ComparisonReport]) -> String {
    let map: serde_json::Map<String, serde_json::Value> = prefixed(reports)
        .into_iter()
        .map(|(k, v)| {
            let value = v
                .parse::<u64>()
                .map(serde_json::Value::from)
                .or_else(|_| v.parse::<f64>().map(serde_json::Value::from))
                .unwrap_or(serde_json::Value::String(v));
            (k, value)
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(map)).expect("map serializes");
    s.push('\n');
    s
}

pub fn render_reports(reports: &[ComparisonReport]) -> String {
    let mut out: Vec<String> = reports.iter().map(ComparisonReport::render).collect();
    if reports.len() > 1 {
        let kv = prefixed(reports);
        let summary: Vec<String> =
            kv.iter().filter(|(k, _)| !k.starts_with("run")).map(|(k, v)| format!("{k:<26}{v}")).collect();
        out.push(summary.join("\n") + "\n");
    }
    out.join("\n")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorMode {
    Equal,
    /// Symmetric Dirichlet with unit concentration.
    Dirichlet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomProblemConfig {
    pub inputs: usize,
    pub faults: usize,
    pub seed: u64,
    pub noise_min: f64,
    pub noise_max: f64,
    pub priors: PriorMode,
}

impl RandomProblemConfig {
    pub fn new(inputs: usize, faults: usize, seed: u64) -> Self {
        Self { inputs, faults, seed, noise_min: 0.05, noise_max: 0.45, priors: PriorMode::Equal }
    }
}

pub const MAX_RANDOM_INPUTS: usize = 24;

/// Random NSB problem: distinct uniform ±1 patterns, noise uniform in
/// `[noise_min, noise_max]`, equal or Dirichlet priors.
pub fn gen_random(config: &RandomProblemConfig) -> Result<NsbProblem> {
    let RandomProblemConfig { inputs: n, faults: m, seed, noise_min, noise_max, priors } = *config;
    if !(1..=MAX_RANDOM_INPUTS).contains(&n) {
        return Err(NsbError::InvalidInput(format!("inputs must be in 1..={MAX_RANDOM_INPUTS}, got {n}")));
    }
    if m < 2 {
        return Err(NsbError::InvalidInput(format!("faults must be at least 2, got {m}")));
    }
    if m as u64 > 1u64 << n {
        return Err(NsbError::InvalidInput(format!("{m} distinct patterns impossible with {n} inputs")));
    }
    if !(0.0 <= noise_min && noise_min <= noise_max && noise_max <= 0.5) {
        return Err(NsbError::InvalidInput(format!(
            "noise range must satisfy 0 <= min <= max <= 1/2, got [{noise_min}, {noise_max}]"
        )));
    }

    let mut rng = training_rng(seed);
    let mut seen = HashSet::with_capacity(m);
    let mut patterns = Vec::with_capacity(m);
    while patterns.len() < m {
        let bits = rng.gen_range(0..1u64 << n);
        if seen.insert(bits) {
            patterns.push(Reading::from_index(bits, n).values().to_vec());
        }
    }
    let noise_dist = Uniform::new_inclusive(noise_min, noise_max);
    let noise = (0..m).map(|_| (0..n).map(|_| noise_dist.sample(&mut rng)).collect()).collect();
    let priors = match priors {
        PriorMode::Equal => vec![1.0 / m as f64; m],
        PriorMode::Dirichlet => {
            let draws: Vec<f64> =
                (0..m).map(|_| Exp1.sample(&mut rng)).map(|x: f64| x.max(f64::MIN_POSITIVE)).collect();
            let total: f64 = draws.iter().sum();
            draws.into_iter().map(|d| d / total).collect()
        }
    };
    let names = (1..=m).map(|i| format!("G{i}")).collect();
    NsbProblem::new(names, priors, patterns, noise)
}
