//! Winner-take-all linear machines: `n` inputs, `m` output cells, no hidden
//! cells. The cell with the largest `w_i0 + sum_j w_ij * V_j` wins.
//!
//! This module also builds the Bayes-optimal machine for an NSB problem in
//! closed form and inverts any machine back into an NSB problem for which it
//! is Bayes-optimal. Logarithms are natural throughout; the inversion relies
//! on the construction using the same base.

use crate::error::{NsbError, Result};
use crate::oracle::Decider;
use crate::problem::{NsbProblem, Reading};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearMachine {
    labels: Vec<String>,
    inputs: usize,
    /// Row-major `m x (n + 1)`, bias in column 0.
    weights: Vec<f64>,
}

impl LinearMachine {
    /// Builds a machine from rows of `[bias, w_1, ..., w_n]`.
    pub fn new(labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(NsbError::InvalidInput("machine needs at least one output".into()));
        }
        if labels.len() != rows.len() {
            return Err(NsbError::DimensionMismatch { expected: rows.len(), actual: labels.len() });
        }
        let width = rows[0].len();
        if width < 2 {
            return Err(NsbError::InvalidInput("machine needs at least one input".into()));
        }
        let mut weights = Vec::with_capacity(rows.len() * width);
        for row in rows {
            if row.len() != width {
                return Err(NsbError::DimensionMismatch { expected: width, actual: row.len() });
            }
            weights.extend(row);
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
            return Err(NsbError::InvalidInput(format!("non-finite weight {w}")));
        }
        Ok(Self { labels, inputs: width - 1, weights })
    }

    /// All-zero machine with labels `G1..Gm`.
    pub fn zeros(outputs: usize, inputs: usize) -> Self {
        assert!(outputs >= 1 && inputs >= 1, "machine needs at least one input and one output");
        Self {
            labels: (1..=outputs).map(|i| format!("G{i}")).collect(),
            inputs,
            weights: vec![0.0; outputs * (inputs + 1)],
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.outputs() {
            return Err(NsbError::DimensionMismatch { expected: self.outputs(), actual: labels.len() });
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// `[bias, w_1, ..., w_n]` for output `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.inputs + 1;
        &self.weights[i * w..(i + 1) * w]
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let w = self.inputs + 1;
        &mut self.weights[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.weights.chunks_exact(self.inputs + 1)
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.row(i)[j]
    }

    fn check(&self, reading: &Reading) -> Result<()> {
        if reading.len() != self.inputs {
            return Err(NsbError::DimensionMismatch { expected: self.inputs, actual: reading.len() });
        }
        Ok(())
    }

    fn score_row(row: &[f64], reading: &[i8]) -> f64 {
        row[1..].iter().zip(reading).fold(row[0], |acc, (&w, &v)| acc + w * f64::from(v))
    }

    /// The `m` affine scores `w_i0 + sum_j w_ij V_j`.
    pub fn scores(&self, reading: &Reading) -> Result<Vec<f64>> {
        self.check(reading)?;
        Ok(self.rows().map(|row| Self::score_row(row, reading.values())).collect())
    }

    /// Winning output; ties go to the lowest index.
    pub fn classify(&self, reading: &Reading) -> Result<usize> {
        self.check(reading)?;
        Ok(self.classify_values(reading.values()))
    }

    pub(crate) fn classify_values(&self, reading: &[i8]) -> usize {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, row) in self.rows().enumerate() {
            let s = Self::score_row(row, reading);
            if s > best_score {
                best = i;
                best_score = s;
            }
        }
        best
    }

    /// Maps every weight through `f`.
    pub fn map_weights(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { labels: self.labels.clone(), inputs: self.inputs, weights: self.weights.iter().map(|&w| f(w)).collect() }
    }
}

impl Decider for LinearMachine {
    /// Panics if the reading width differs; the oracle checks widths up front.
    fn decide(&self, reading: &Reading) -> usize {
        assert_eq!(reading.len(), self.inputs, "reading width");
        self.classify_values(reading.values())
    }

    fn inputs(&self) -> Option<usize> {
        Some(self.inputs)
    }
}

fn log_odds(noise: f64) -> f64 {
    ((1.0 - noise) / noise).ln()
}

/// Weight magnitude standing in for the infinite log-odds of a noise-free
/// reading: one more than
/// `max_i { |log P(G_i)| + sum_{N>0} |log((1-N)N)| + sum_{N>0} |A log((1-N)/N)| }`.
pub fn choose_k(problem: &NsbProblem) -> f64 {
    let bound = (0..problem.faults())
        .map(|i| {
            let noisy = problem.noise_row(i).iter().zip(problem.pattern(i)).filter(|(&nz, _)| nz > 0.0);
            let spread: f64 = noisy.clone().map(|(&nz, _)| ((1.0 - nz) * nz).ln().abs()).sum();
            let odds: f64 = noisy.map(|(&nz, &a)| (f64::from(a) * log_odds(nz)).abs()).sum();
            problem.prior(i).ln().abs() + spread + odds
        })
        .fold(f64::NEG_INFINITY, f64::max);
    bound + 1.0
}

/// The closed-form Bayes-optimal linear machine for `problem`.
///
/// Input weights are `alpha * A_ij * log((1-N_ij)/N_ij)`, or `alpha * A_ij * K`
/// for noise-free readings. Biases are
/// `beta + alpha * (2 log P(G_i) + sum_{N>0} log((1-N_ij) N_ij) - K * #{N_ij = 0})`,
/// i.e. twice the log posterior up to a fault-independent constant.
pub fn bayes_network(problem: &NsbProblem, alpha: f64, beta: f64) -> Result<LinearMachine> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(NsbError::InvalidInput(format!("alpha must be positive and finite, got {alpha}")));
    }
    if !beta.is_finite() {
        return Err(NsbError::InvalidInput(format!("beta must be finite, got {beta}")));
    }
    let k = choose_k(problem);
    let rows = (0..problem.faults())
        .map(|i| {
            let mut row = Vec::with_capacity(problem.inputs() + 1);
            let mut spread = 0.0;
            let mut noiseless = 0usize;
            row.push(0.0);
            for (&a, &nz) in problem.pattern(i).iter().zip(problem.noise_row(i)) {
                let a = f64::from(a);
                if nz > 0.0 {
                    spread += ((1.0 - nz) * nz).ln();
                    row.push(alpha * a * log_odds(nz));
                } else {
                    noiseless += 1;
                    row.push(alpha * a * k);
                }
            }
            row[0] = beta + alpha * (2.0 * problem.prior(i).ln() + spread - k * noiseless as f64);
            row
        })
        .collect();
    LinearMachine::new(problem.names().to_vec(), rows)
}

/// An NSB problem recovered from a machine, with the `beta` that rebuilds
/// the machine's biases at `alpha = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Inversion {
    pub problem: NsbProblem,
    pub beta: f64,
}

/// Recovers an NSB problem for which `machine` computes a Bayes-optimal rule.
///
/// `A_ij = sign(w_ij)` (`+1` for zero weights), `N_ij = 1 / (1 + e^|w_ij|)`,
/// so `N = 1/2` exactly where `w = 0`. Priors solve the bias equation with
/// `alpha = 1` and sum to 1 by construction.
pub fn network_to_nsb(machine: &LinearMachine) -> Result<Inversion> {
    let mut patterns = Vec::with_capacity(machine.outputs());
    let mut noise = Vec::with_capacity(machine.outputs());
    // half_logs[i] = (w_i0 - S_i) / 2 with S_i = sum_j log((1-N_ij) N_ij)
    let mut half_logs = Vec::with_capacity(machine.outputs());
    for row in machine.rows() {
        let mut spread = 0.0;
        let mut pat = Vec::with_capacity(machine.inputs());
        let mut nz_row = Vec::with_capacity(machine.inputs());
        for &w in &row[1..] {
            pat.push(if w >= 0.0 { 1 } else { -1 });
            let x = w.abs();
            // log N = -softplus(x), log(1-N) = -softplus(-x)
            let log_n = -softplus(x);
            let log_keep = -softplus(-x);
            nz_row.push(log_n.exp());
            spread += log_n + log_keep;
        }
        half_logs.push((row[0] - spread) / 2.0);
        patterns.push(pat);
        noise.push(nz_row);
    }
    let max = half_logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_total = max + half_logs.iter().map(|h| (h - max).exp()).sum::<f64>().ln();
    let beta = 2.0 * log_total;
    let priors: Vec<f64> = half_logs.iter().map(|h| (h - log_total).exp()).collect();
    let problem = NsbProblem::new(machine.labels().to_vec(), priors, patterns, noise)?;
    Ok(Inversion { problem, beta })
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{bayes_decide, BayesDecider};
    use crate::problem::lemonade;

    #[test]
    fn zero_machine_ties_to_first() {
        let m = LinearMachine::zeros(4, 3);
        for idx in 0..8 {
            let r = Reading::from_index(idx, 3);
            assert_eq!(m.classify(&r).unwrap(), 0);
            assert_eq!(m.scores(&r).unwrap(), vec![0.0; 4]);
        }
    }

    #[test]
    fn bias_dominance() {
        let m =
            LinearMachine::new(vec!["A".into(), "B".into()], vec![vec![0.0, 0.0, 0.0], vec![10.0, 0.0, 0.0]]).unwrap();
        for idx in 0..4 {
            assert_eq!(m.classify(&Reading::from_index(idx, 2)).unwrap(), 1);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let m = LinearMachine::zeros(2, 3);
        let r = Reading::new(vec![1, 1]).unwrap();
        assert!(matches!(m.classify(&r), Err(NsbError::DimensionMismatch { expected: 3, actual: 2 })));
        assert!(m.scores(&r).is_err());
        assert!(LinearMachine::new(vec!["A".into()], vec![vec![f64::NAN, 1.0]]).is_err());
        assert!(LinearMachine::new(vec!["A".into(), "B".into()], vec![vec![0.0, 1.0], vec![0.0]]).is_err());
    }

    #[test]
    fn score_shift_and_scale() {
        let m = LinearMachine::new(
            vec!["A".into(), "B".into(), "C".into()],
            vec![vec![0.3, 1.0, -2.0], vec![-1.0, 0.5, 0.5], vec![0.0, -1.5, 2.5]],
        )
        .unwrap();
        let r = Reading::new(vec![1, -1]).unwrap();
        let base = m.scores(&r).unwrap();
        let shifted = LinearMachine::new(
            m.labels().to_vec(),
            m.rows()
                .map(|row| {
                    let mut v = row.to_vec();
                    v[0] += 4.0;
                    v
                })
                .collect(),
        )
        .unwrap();
        for (a, b) in base.iter().zip(shifted.scores(&r).unwrap()) {
            assert!((b - a - 4.0).abs() < 1e-12);
        }
        let scaled = m.map_weights(|w| 2.5 * w);
        for (a, b) in base.iter().zip(scaled.scores(&r).unwrap()) {
            assert!((b - 2.5 * a).abs() < 1e-12);
        }
        assert_eq!(scaled.classify(&r).unwrap(), m.classify(&r).unwrap());
    }

    #[test]
    fn uninformative_input_has_zero_weight() {
        let p = NsbProblem::new(
            vec!["A".into(), "B".into()],
            vec![0.5, 0.5],
            vec![vec![1, -1], vec![-1, 1]],
            vec![vec![0.5, 0.2], vec![0.5, 0.3]],
        )
        .unwrap();
        let m = bayes_network(&p, 1.0, 0.0).unwrap();
        assert_eq!(m.weight(0, 1), 0.0);
        assert_eq!(m.weight(1, 1), 0.0);
        let k = choose_k(&p);
        let expected = 1.0 + 0.5f64.ln().abs() + (0.8f64 * 0.2).ln().abs() + 0.25f64.ln().abs() + 4f64.ln();
        let other = 1.0 + 0.5f64.ln().abs() + (0.7f64 * 0.3).ln().abs() + 0.25f64.ln().abs() + (0.7f64 / 0.3).ln();
        assert!((k - expected.max(other)).abs() < 1e-12);
    }

    #[test]
    fn k_for_uniform_noise() {
        let n = 5;
        let p = NsbProblem::new(
            vec!["A".into(), "B".into()],
            vec![0.5, 0.5],
            vec![vec![1; n], vec![-1; n]],
            vec![vec![0.5; n]; 2],
        )
        .unwrap();
        let expected = 1.0 + 0.5f64.ln().abs() + n as f64 * 0.25f64.ln().abs();
        assert!((choose_k(&p) - expected).abs() < 1e-12);
    }

    #[test]
    fn lemonade_weights() {
        let p = lemonade();
        let m = bayes_network(&p, 1.0, 0.0).unwrap();
        assert!((m.weight(0, 1) - (0.85f64 / 0.15).ln()).abs() < 1e-15);
        for i in 0..9 {
            for k in 0..9 {
                let lhs = m.weight(i, 0) - m.weight(k, 0);
                let rhs = 2.0 * (p.prior(i).ln() - p.prior(k).ln());
                assert!((lhs - rhs).abs() < 1e-12, "{i} {k}");
            }
        }
        let all_low = Reading::new(vec![-1; 8]).unwrap();
        assert_eq!(m.classify(&all_low).unwrap(), bayes_decide(&p, &all_low).unwrap());
        assert_eq!(m.classify(&all_low).unwrap(), 8);
    }

    #[test]
    fn rejects_bad_alpha() {
        assert!(bayes_network(&lemonade(), 0.0, 0.0).is_err());
        assert!(bayes_network(&lemonade(), -1.0, 0.0).is_err());
    }

    #[test]
    fn noiseless_positions_use_k() {
        let p = NsbProblem::new(
            vec!["A".into(), "B".into()],
            vec![0.9, 0.1],
            vec![vec![1, 1, -1], vec![-1, 1, 1]],
            vec![vec![0.0, 0.2, 0.1], vec![0.3, 0.0, 0.0]],
        )
        .unwrap();
        let k = choose_k(&p);
        let m = bayes_network(&p, 2.0, 1.0).unwrap();
        assert_eq!(m.weight(0, 1), 2.0 * k);
        assert_eq!(m.weight(1, 3), 2.0 * k);
        let rule = BayesDecider::new(&p);
        for idx in 0..8 {
            let r = Reading::from_index(idx, 3);
            let chosen = m.classify(&r).unwrap();
            let scores = rule.log_scores(&r);
            let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!(scores[chosen] == best || (scores[chosen] - best).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_machine_inverts_to_uniform() {
        let inv = network_to_nsb(&LinearMachine::zeros(3, 4)).unwrap();
        for i in 0..3 {
            assert!((inv.problem.prior(i) - 1.0 / 3.0).abs() < 1e-15);
            assert!(inv.problem.noise_row(i).iter().all(|&n| n == 0.5));
            assert!(inv.problem.pattern(i).iter().all(|&a| a == 1));
        }
    }

    #[test]
    fn inversion_rebuilds_weights() {
        let m = LinearMachine::new(
            vec!["X".into(), "Y".into(), "Z".into()],
            vec![vec![1.5, 0.7, -2.0, 0.0], vec![-0.4, -1.1, 0.3, 2.2], vec![0.0, 0.05, 4.0, -0.6]],
        )
        .unwrap();
        let inv = network_to_nsb(&m).unwrap();
        let sum: f64 = inv.problem.priors().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        let rebuilt = bayes_network(&inv.problem, 1.0, inv.beta).unwrap();
        for (a, b) in m.rows().zip(rebuilt.rows()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-9, "{x} vs {y}");
            }
        }
        assert_eq!(inv.problem.names(), m.labels());
        assert_eq!(inv.problem.noise_row(0)[2], 0.5);
    }

    #[test]
    fn softplus_matches_naive() {
        for x in [-30.0, -2.0, 0.0, 0.5, 3.0, 40.0] {
            let naive = (1.0f64 + f64::exp(x)).ln();
            assert!((softplus(x) - naive).abs() < 1e-12);
        }
    }
}
