//! Noisy single-pattern boolean (NSB) fault detection problems.
//!
//! A problem has `m` faults, each with a prior probability, a noise-free
//! pattern of `n` readings in `{-1, +1}` and a per-reading flip probability
//! in `[0, 1/2]`. Readings flip independently given the fault.
//!
//! Fault indices are 0-based in the API. Labels (`G1`, `G2`, ...) are for
//! display and file formats only.

use std::fmt;

use rand::Rng;

use crate::error::{NsbError, Result};

/// Tolerance on `|sum(priors) - 1|` accepted by [`NsbProblem::validate`].
pub const PRIOR_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct NsbProblem {
    names: Vec<String>,
    priors: Vec<f64>,
    patterns: Vec<Vec<i8>>,
    noise: Vec<Vec<f64>>,
}

/// One broken invariant reported by [`NsbProblem::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    /// 1-based position, empty for whole-field violations.
    pub index: Vec<usize>,
    pub bound: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.field)?;
        if !self.index.is_empty() {
            let idx: Vec<String> = self.index.iter().map(usize::to_string).collect();
            write!(f, "[{}]", idx.join(","))?;
        }
        write!(f, " {}", self.bound)
    }
}

impl NsbProblem {
    /// Builds a problem and checks every invariant.
    pub fn new(names: Vec<String>, priors: Vec<f64>, patterns: Vec<Vec<i8>>, noise: Vec<Vec<f64>>) -> Result<Self> {
        Self::new_unchecked(names, priors, patterns, noise).validated()
    }

    /// Builds a problem without validation. Most operations assume a valid
    /// problem; use [`NsbProblem::validate`] before relying on one of these.
    pub fn new_unchecked(names: Vec<String>, priors: Vec<f64>, patterns: Vec<Vec<i8>>, noise: Vec<Vec<f64>>) -> Self {
        Self { names, priors, patterns, noise }
    }

    /// Builds a problem whose noise row is shared by every fault.
    pub fn with_shared_noise(
        names: Vec<String>,
        priors: Vec<f64>,
        patterns: Vec<Vec<i8>>,
        noise_row: Vec<f64>,
    ) -> Result<Self> {
        let noise = vec![noise_row; patterns.len()];
        Self::new(names, priors, patterns, noise)
    }

    pub fn validated(self) -> Result<Self> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(NsbError::InvalidProblem(violations.iter().map(ToString::to_string).collect()))
        }
    }

    /// Returns every broken invariant; an empty list means the problem is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let m = self.priors.len();
        if m == 0 {
            out.push(Violation { field: "faults", index: vec![], bound: "count must be >= 1".into() });
        }
        if self.names.len() != m {
            out.push(Violation {
                field: "names",
                index: vec![],
                bound: format!("count {} != {m} faults", self.names.len()),
            });
        }
        if self.patterns.len() != m || self.noise.len() != m {
            out.push(Violation {
                field: "patterns",
                index: vec![],
                bound: format!(
                    "row counts ({} patterns, {} noise) != {m} faults",
                    self.patterns.len(),
                    self.noise.len()
                ),
            });
        }
        let n = self.inputs();
        if n == 0 {
            out.push(Violation { field: "inputs", index: vec![], bound: "count must be >= 1".into() });
        }

        for (i, &p) in self.priors.iter().enumerate() {
            if !(p > 0.0 && p <= 1.0) {
                out.push(Violation { field: "prior", index: vec![i + 1], bound: format!("{p} not in (0,1]") });
            }
        }
        let sum: f64 = self.priors.iter().sum();
        if m > 0 && (sum.is_nan() || (sum - 1.0).abs() > PRIOR_SUM_TOLERANCE) {
            out.push(Violation { field: "priors", index: vec![], bound: format!("sum ≠ 1 ({sum})") });
        }

        for (i, row) in self.patterns.iter().enumerate() {
            if row.len() != n {
                out.push(Violation {
                    field: "pattern",
                    index: vec![i + 1],
                    bound: format!("length {} != {n}", row.len()),
                });
            }
            for (j, &a) in row.iter().enumerate() {
                if a != 1 && a != -1 {
                    out.push(Violation { field: "pattern", index: vec![i + 1, j + 1], bound: format!("{a} not ±1") });
                }
            }
        }
        for (i, row) in self.noise.iter().enumerate() {
            if row.len() != n {
                out.push(Violation {
                    field: "noise",
                    index: vec![i + 1],
                    bound: format!("length {} != {n}", row.len()),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v.is_nan() || v < 0.0 {
                    out.push(Violation { field: "noise", index: vec![i + 1, j + 1], bound: "< 0".into() });
                } else if v > 0.5 {
                    out.push(Violation { field: "noise", index: vec![i + 1, j + 1], bound: "> 1/2".into() });
                }
            }
        }
        out
    }

    /// Number of faults `m`.
    pub fn faults(&self) -> usize {
        self.priors.len()
    }

    /// Number of instrument readings `n`.
    pub fn inputs(&self) -> usize {
        self.patterns.first().map_or(0, Vec::len)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, fault: usize) -> &str {
        &self.names[fault]
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn prior(&self, fault: usize) -> f64 {
        self.priors[fault]
    }

    pub fn patterns(&self) -> &[Vec<i8>] {
        &self.patterns
    }

    pub fn pattern(&self, fault: usize) -> &[i8] {
        &self.patterns[fault]
    }

    pub fn noise(&self) -> &[Vec<f64>] {
        &self.noise
    }

    pub fn noise_row(&self, fault: usize) -> &[f64] {
        &self.noise[fault]
    }

    /// True when every fault shares the same noise row.
    pub fn has_shared_noise(&self) -> bool {
        self.noise.windows(2).all(|w| w[0] == w[1])
    }

    /// Index of the fault labelled `name`.
    pub fn fault_by_name(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Normalizes `frequency * importance` products into priors.
///
/// When the penalty for a missed fault does not depend on which wrong fault
/// was chosen, maximizing correct classifications under these priors
/// maximizes expected utility.
pub fn fold_priors(frequencies: &[f64], importances: &[f64]) -> Result<Vec<f64>> {
    if frequencies.len() != importances.len() {
        return Err(NsbError::DimensionMismatch { expected: frequencies.len(), actual: importances.len() });
    }
    if frequencies.is_empty() {
        return Err(NsbError::InvalidInput("no faults to fold".into()));
    }
    if let Some(bad) = frequencies.iter().chain(importances).find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(NsbError::InvalidInput(format!("frequency and importance must be positive, got {bad}")));
    }
    let products: Vec<f64> = frequencies.iter().zip(importances).map(|(f, u)| f * u).collect();
    let total: f64 = products.iter().sum();
    Ok(products.into_iter().map(|p| p / total).collect())
}

pub const LEMONADE_FREQUENCIES: [f64; 9] = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 40.0];
pub const LEMONADE_IMPORTANCES: [f64; 9] = [20.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 1.0];
pub const LEMONADE_NOISE: [f64; 8] = [0.15, 0.25, 0.20, 0.15, 0.10, 0.20, 0.10, 0.05];
pub const LEMONADE_PATTERNS: [[i8; 8]; 9] = [
    [1, 1, -1, 1, 1, 1, 1, 1],
    [-1, -1, 1, 1, 1, 1, 1, 1],
    [-1, -1, -1, 1, 1, 1, 1, 1],
    [-1, -1, -1, -1, -1, -1, -1, -1],
    [-1, -1, -1, 1, 1, -1, -1, -1],
    [-1, -1, -1, -1, -1, 1, 1, 1],
    [-1, -1, -1, -1, 1, -1, -1, -1],
    [-1, -1, -1, -1, -1, -1, -1, 1],
    [-1, -1, -1, -1, -1, -1, -1, -1],
];

/// The nine-fault, eight-instrument lemonade benchmark.
///
/// Priors are the frequency × importance ratios over their total of 78;
/// G9 is normal operation. Noise is the same for every fault.
pub fn lemonade() -> NsbProblem {
    let names = (1..=9).map(|i| format!("G{i}")).collect();
    let priors = fold_priors(&LEMONADE_FREQUENCIES, &LEMONADE_IMPORTANCES).expect("constant inputs are positive");
    let patterns = LEMONADE_PATTERNS.iter().map(|r| r.to_vec()).collect();
    NsbProblem::with_shared_noise(names, priors, patterns, LEMONADE_NOISE.to_vec())
        .expect("built-in lemonade problem is valid")
}

/// A vector of instrument readings over `{-1, 0, +1}`; `0` marks an unknown reading.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Reading(Vec<i8>);

impl Reading {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !matches!(v, -1..=1)) {
            return Err(NsbError::InvalidInput(format!("reading entry {bad} not in {{-1,0,1}}")));
        }
        Ok(Self(values))
    }

    /// The `index`-th fully known reading in enumeration order: bit `j`
    /// (LSB first) set means reading `j` is `+1`, clear means `-1`.
    pub fn from_index(index: u64, inputs: usize) -> Self {
        let mut r = Self(vec![0; inputs]);
        r.set_from_index(index);
        r
    }

    pub(crate) fn set_from_index(&mut self, index: u64) {
        for (j, v) in self.0.iter_mut().enumerate() {
            *v = if (index >> j) & 1 == 1 { 1 } else { -1 };
        }
    }

    /// Parses whitespace-separated tokens `-1`, `0`, `1`.
    pub fn parse(text: &str) -> Result<Self> {
        let values = text
            .split_whitespace()
            .map(|t| match t {
                "1" | "+1" => Ok(1),
                "0" => Ok(0),
                "-1" => Ok(-1),
                other => Err(NsbError::InvalidInput(format!("reading token {other:?} not in {{-1,0,1}}"))),
            })
            .collect::<Result<Vec<i8>>>()?;
        if values.is_empty() {
            return Err(NsbError::InvalidInput("empty reading".into()));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_fully_known(&self) -> bool {
        self.0.iter().all(|&v| v != 0)
    }

    /// Copy with reading `j` (0-based) marked unknown.
    pub fn masked(&self, j: usize) -> Self {
        let mut v = self.0.clone();
        v[j] = 0;
        Self(v)
    }
}

impl fmt::Display for Reading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(i8::to_string).collect();
        f.write_str(&parts.join(" "))
    }
}

/// A fully known reading paired with the fault that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    pub reading: Reading,
    pub fault: usize,
}

impl TrainingExample {
    pub fn new(reading: Reading, fault: usize) -> Result<Self> {
        if !reading.is_fully_known() {
            return Err(NsbError::UnknownReading);
        }
        Ok(Self { reading, fault })
    }
}

/// Draws one example from the generative model: a fault by prior, then
/// independent flips of its pattern.
pub fn sample_example<R: Rng + ?Sized>(problem: &NsbProblem, rng: &mut R) -> TrainingExample {
    let fault = sample_fault(problem.priors(), rng);
    let values = problem
        .pattern(fault)
        .iter()
        .zip(problem.noise_row(fault))
        .map(|(&a, &noise)| if rng.gen::<f64>() < noise { -a } else { a })
        .collect();
    TrainingExample { reading: Reading(values), fault }
}

fn sample_fault<R: Rng + ?Sized>(priors: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen::<f64>() * priors.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, &p) in priors.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    priors.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::training_rng;

    fn two_fault(noise: f64) -> NsbProblem {
        NsbProblem::new_unchecked(
            vec!["A".into(), "B".into()],
            vec![0.5, 0.5],
            vec![vec![1, 1], vec![-1, -1]],
            vec![vec![noise, 0.1], vec![0.1, 0.1]],
        )
    }

    #[test]
    fn lemonade_matches_figure() {
        let p = lemonade();
        assert!(p.validate().is_empty());
        assert_eq!(p.faults(), 9);
        assert_eq!(p.inputs(), 8);
        assert_eq!(p.pattern(0), &[1, 1, -1, 1, 1, 1, 1, 1]);
        assert_eq!(p.pattern(8), &[-1; 8]);
        assert!((p.prior(8) - 40.0 / 78.0).abs() < 1e-15);
        assert!((p.prior(0) - 20.0 / 78.0).abs() < 1e-15);
        assert!(p.has_shared_noise());
        assert_eq!(p.noise_row(4), &LEMONADE_NOISE);
    }

    #[test]
    fn noise_above_half_is_reported() {
        let v = two_fault(0.6).validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].to_string(), "noise[1,1] > 1/2");
    }

    #[test]
    fn prior_sum_is_checked() {
        let p = NsbProblem::new_unchecked(
            vec!["A".into(), "B".into()],
            vec![0.45, 0.45],
            vec![vec![1], vec![-1]],
            vec![vec![0.1], vec![0.1]],
        );
        let v = p.validate();
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().starts_with("priors sum ≠ 1"));
    }

    #[test]
    fn zero_prior_and_bad_pattern_rejected() {
        let p = NsbProblem::new_unchecked(
            vec!["A".into(), "B".into()],
            vec![0.0, 1.0],
            vec![vec![1, 0], vec![-1, 1]],
            vec![vec![0.1, 0.5], vec![0.1, 0.0]],
        );
        let msgs: Vec<String> = p.validate().iter().map(ToString::to_string).collect();
        assert!(msgs.iter().any(|m| m.starts_with("prior[1]")));
        assert!(msgs.iter().any(|m| m == "pattern[1,2] 0 not ±1"));
        assert_eq!(msgs.len(), 2);
    }

    #[test]
    fn fold_priors_examples() {
        let p = fold_priors(&LEMONADE_FREQUENCIES, &LEMONADE_IMPORTANCES).unwrap();
        let ratios = [20.0, 2.0, 2.0, 2.0, 2.0, 2.0, 4.0, 4.0, 40.0];
        for (got, r) in p.iter().zip(ratios) {
            assert!((got - r / 78.0).abs() < 1e-15);
        }
        assert_eq!(fold_priors(&[1.0; 4], &[1.0; 4]).unwrap(), vec![0.25; 4]);
        assert_eq!(fold_priors(&[1.0, 2.0], &[2.0, 1.0]).unwrap(), vec![0.5, 0.5]);
        assert!(fold_priors(&[1.0, 0.0], &[1.0, 1.0]).is_err());
        assert!(fold_priors(&[1.0, 2.0], &[1.0, -1.0]).is_err());
        assert!(fold_priors(&[1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn zero_noise_samples_reproduce_pattern() {
        let p = NsbProblem::new(
            vec!["A".into(), "B".into(), "C".into()],
            vec![0.2, 0.3, 0.5],
            vec![vec![1, -1, 1], vec![-1, -1, 1], vec![1, 1, 1]],
            vec![vec![0.0; 3]; 3],
        )
        .unwrap();
        let mut rng = training_rng(7);
        for _ in 0..500 {
            let ex = sample_example(&p, &mut rng);
            assert_eq!(ex.reading.values(), p.pattern(ex.fault));
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let p = lemonade();
        let a: Vec<_> = {
            let mut rng = training_rng(99);
            (0..200).map(|_| sample_example(&p, &mut rng)).collect()
        };
        let mut rng = training_rng(99);
        let b: Vec<_> = (0..200).map(|_| sample_example(&p, &mut rng)).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn reading_parse_and_index() {
        let r = Reading::parse("-1 0 1").unwrap();
        assert_eq!(r.values(), &[-1, 0, 1]);
        assert!(!r.is_fully_known());
        assert!(Reading::parse("1 2").is_err());
        assert!(Reading::parse("").is_err());
        assert_eq!(Reading::from_index(0b101, 3).values(), &[1, -1, 1]);
        assert_eq!(Reading::from_index(0, 2).values(), &[-1, -1]);
        assert_eq!(r.to_string(), "-1 0 1");
        assert!(TrainingExample::new(r, 0).is_err());
    }
}
