//! Pocket algorithm for winner-take-all linear machines.
//!
//! A multi-class perceptron runs on randomly drawn examples while a second
//! copy of the weights (the pocket) keeps the weights that produced the
//! longest run of consecutive correct classifications. With the ratchet
//! enabled, the pocket only changes when the candidate is also strictly more
//! accurate on the fixed training set.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NsbError, Result};
use crate::machine::LinearMachine;
use crate::problem::{sample_example, NsbProblem, TrainingExample};
use crate::seeding::training_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    pub iterations: u64,
    pub seed: u64,
    pub ratchet: bool,
    /// Draw this many examples up front and train on them (finite mode).
    pub dataset_size: Option<usize>,
    pub learning_rate: f64,
}

impl TrainerConfig {
    pub fn new(iterations: u64, seed: u64) -> Self {
        Self { iterations, seed, ratchet: false, dataset_size: None, learning_rate: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(NsbError::InvalidConfig("iterations must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(NsbError::InvalidConfig(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.dataset_size == Some(0) {
            return Err(NsbError::InvalidConfig("dataset size must be positive".into()));
        }
        if self.ratchet && self.dataset_size.is_none() {
            return Err(NsbError::InvalidConfig("ratchet requires a dataset size".into()));
        }
        Ok(())
    }
}

/// Where training examples come from.
#[derive(Debug, Clone, Copy)]
pub enum TrainingSource<'a> {
    /// Fresh draws from the generative model, or a fixed set drawn from it
    /// when `dataset_size` is set.
    Problem(&'a NsbProblem),
    /// A fixed example set.
    Examples(&'a [TrainingExample]),
}

/// One pocket replacement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapRecord {
    /// 1-based iteration at which the swap happened.
    pub iteration: u64,
    pub run_length: u64,
    /// Training-set accuracy of the new pocket (finite mode only).
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRun {
    /// Pocket weights.
    pub final_machine: LinearMachine,
    pub pocket_run_length: u64,
    pub swap_count: u64,
    /// `(iteration, accuracy)` of the pocket, starting with the zero machine
    /// at iteration 0. Ratchet mode only.
    pub pocket_accuracy_history: Vec<(u64, f64)>,
    pub iterations_executed: u64,
    pub swaps: Vec<SwapRecord>,
}

impl TrainingRun {
    /// Swap log as CSV: `iteration,swap,pocket_run_length,accuracy`.
    pub fn log_csv(&self) -> String {
        let mut out = String::from("iteration,swap,pocket_run_length,accuracy\n");
        for (k, s) in self.swaps.iter().enumerate() {
            let acc = s.accuracy.map(|a| format!("{a:.6}")).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", s.iteration, k + 1, s.run_length, acc));
        }
        out
    }
}

/// One multi-class perceptron update. When `example` is misclassified as
/// fault `k`, the true row gains `rate * (1, V)` and row `k` loses it.
pub fn perceptron_step(weights: &LinearMachine, example: &TrainingExample, rate: f64) -> Result<LinearMachine> {
    let predicted = weights.classify(&example.reading)?;
    if example.fault >= weights.outputs() {
        return Err(NsbError::InvalidInput(format!("fault index {} out of range", example.fault)));
    }
    let mut next = weights.clone();
    if predicted != example.fault {
        update(&mut next, example, predicted, rate);
    }
    Ok(next)
}

fn update(machine: &mut LinearMachine, example: &TrainingExample, predicted: usize, rate: f64) {
    let v = example.reading.values();
    let row = machine.row_mut(example.fault);
    row[0] += rate;
    for (w, &x) in row[1..].iter_mut().zip(v) {
        *w += rate * f64::from(x);
    }
    let row = machine.row_mut(predicted);
    row[0] -= rate;
    for (w, &x) in row[1..].iter_mut().zip(v) {
        *w -= rate * f64::from(x);
    }
}

/// Fraction of `examples` that `weights` classifies correctly.
pub fn accuracy_on(weights: &LinearMachine, examples: &[TrainingExample]) -> Result<f64> {
    if examples.is_empty() {
        return Err(NsbError::InvalidInput("accuracy of an empty example set".into()));
    }
    let mut correct = 0usize;
    for ex in examples {
        if weights.classify(&ex.reading)? == ex.fault {
            correct += 1;
        }
    }
    Ok(correct as f64 / examples.len() as f64)
}

fn correct_count(weights: &LinearMachine, examples: &[TrainingExample]) -> usize {
    examples.iter().filter(|ex| weights.classify_values(ex.reading.values()) == ex.fault).count()
}

/// Runs the pocket algorithm from zero weights.
pub fn train(source: TrainingSource<'_>, config: &TrainerConfig) -> Result<TrainingRun> {
    config.validate()?;
    let mut rng = training_rng(config.seed);

    let owned;
    let (problem, dataset, labels, inputs, outputs) = match source {
        TrainingSource::Problem(p) => {
            let data = match config.dataset_size {
                Some(d) => {
                    owned = (0..d).map(|_| sample_example(p, &mut rng)).collect::<Vec<_>>();
                    Some(owned.as_slice())
                }
                None => None,
            };
            (Some(p), data, p.names().to_vec(), p.inputs(), p.faults())
        }
        TrainingSource::Examples(ex) => {
            if ex.is_empty() {
                return Err(NsbError::InvalidInput("empty training set".into()));
            }
            let inputs = ex[0].reading.len();
            let outputs = ex.iter().map(|e| e.fault).max().unwrap_or(0) + 1;
            if let Some(bad) = ex.iter().find(|e| e.reading.len() != inputs) {
                return Err(NsbError::DimensionMismatch { expected: inputs, actual: bad.reading.len() });
            }
            let labels = (1..=outputs).map(|i| format!("G{i}")).collect();
            (None, Some(ex), labels, inputs, outputs)
        }
    };
    if config.ratchet && dataset.is_none() {
        return Err(NsbError::InvalidConfig("ratchet requires a fixed training set".into()));
    }

    let mut working = LinearMachine::zeros(outputs, inputs).with_labels(labels)?;
    let mut pocket = working.clone();
    let mut run = 0u64;
    let mut pocket_run = 0u64;
    let mut swaps = Vec::new();
    let mut history = Vec::new();

    let total = dataset.map(<[_]>::len).unwrap_or(0);
    let mut pocket_correct = dataset.map(|d| correct_count(&pocket, d));
    if let (true, Some(c)) = (config.ratchet, pocket_correct) {
        history.push((0, c as f64 / total as f64));
    }
    // Working weights only change on a mistake; cache their training-set
    // score until the next update.
    let mut working_correct: Option<usize> = None;

    for it in 1..=config.iterations {
        let fresh;
        let example = match (dataset, problem) {
            (Some(d), _) => &d[rng.gen_range(0..d.len())],
            (None, Some(p)) => {
                fresh = sample_example(p, &mut rng);
                &fresh
            }
            (None, None) => unreachable!("examples source always has a dataset"),
        };
        let predicted = working.classify_values(example.reading.values());
        if predicted != example.fault {
            update(&mut working, example, predicted, config.learning_rate);
            run = 0;
            working_correct = None;
            continue;
        }
        run += 1;
        if run <= pocket_run {
            continue;
        }
        let correct = dataset.map(|d| *working_correct.get_or_insert_with(|| correct_count(&working, d)));
        if config.ratchet && correct <= pocket_correct {
            continue;
        }
        pocket.clone_from(&working);
        pocket_run = run;
        let accuracy = correct.map(|c| c as f64 / total as f64);
        if let (Some(c), Some(a)) = (correct, accuracy) {
            pocket_correct = Some(c);
            if config.ratchet {
                history.push((it, a));
            }
        }
        swaps.push(SwapRecord { iteration: it, run_length: run, accuracy });
    }

    Ok(TrainingRun {
        final_machine: pocket,
        pocket_run_length: pocket_run,
        swap_count: swaps.len() as u64,
        pocket_accuracy_history: history,
        iterations_executed: config.iterations,
        swaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{lemonade, Reading};

    fn ex(v: Vec<i8>, fault: usize) -> TrainingExample {
        TrainingExample::new(Reading::new(v).unwrap(), fault).unwrap()
    }

    #[test]
    fn correct_example_leaves_weights() {
        let m =
            LinearMachine::new(vec!["A".into(), "B".into()], vec![vec![1.0, 1.0, 0.0], vec![0.0, -1.0, 0.0]]).unwrap();
        let next = perceptron_step(&m, &ex(vec![1, 1], 0), 1.0).unwrap();
        assert_eq!(next, m);
        // tie on the zero machine resolves to fault 1, which is correct here
        let z = LinearMachine::zeros(2, 2);
        assert_eq!(perceptron_step(&z, &ex(vec![1, -1], 0), 1.0).unwrap(), z);
    }

    #[test]
    fn hand_executed_update() {
        let z =
            LinearMachine::new(vec!["A".into(), "B".into()], vec![vec![0.0, 0.0, 0.0], vec![10.0, 0.0, 0.0]]).unwrap();
        let next = perceptron_step(&z, &ex(vec![1, -1], 0), 1.0).unwrap();
        assert_eq!(next.row(0), &[1.0, 1.0, -1.0]);
        assert_eq!(next.row(1), &[9.0, -1.0, 1.0]);
    }

    #[test]
    fn update_touches_only_two_rows() {
        let z = LinearMachine::new(
            vec!["A".into(), "B".into(), "C".into()],
            vec![vec![0.0; 3], vec![0.0; 3], vec![5.0, 0.0, 0.0]],
        )
        .unwrap();
        let next = perceptron_step(&z, &ex(vec![-1, 1], 1), 0.5).unwrap();
        assert_eq!(next.row(0), z.row(0));
        assert_eq!(next.row(1), &[0.5, -0.5, 0.5]);
        assert_eq!(next.row(2), &[4.5, 0.5, -0.5]);
    }

    #[test]
    fn accuracy_examples() {
        let set = vec![ex(vec![1, 1], 0), ex(vec![-1, -1], 1), ex(vec![1, -1], 1), ex(vec![-1, 1], 0)];
        let z = LinearMachine::zeros(2, 2);
        assert_eq!(accuracy_on(&z, &set).unwrap(), 0.5);
        let mut rev = set.clone();
        rev.reverse();
        assert_eq!(accuracy_on(&z, &rev).unwrap(), 0.5);
        let perfect =
            LinearMachine::new(vec!["A".into(), "B".into()], vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, -1.0]]).unwrap();
        assert_eq!(accuracy_on(&perfect, &set).unwrap(), 1.0);
        assert!(accuracy_on(&z, &[]).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = TrainerConfig::new(10, 1);
        assert!(c.validate().is_ok());
        c.ratchet = true;
        assert!(matches!(c.validate(), Err(NsbError::InvalidConfig(_))));
        c.dataset_size = Some(50);
        assert!(c.validate().is_ok());
        c.learning_rate = 0.0;
        assert!(c.validate().is_err());
        assert!(TrainerConfig::new(0, 1).validate().is_err());
        assert!(train(
            TrainingSource::Problem(&lemonade()),
            &TrainerConfig { ratchet: true, ..TrainerConfig::new(5, 1) }
        )
        .is_err());
    }

    #[test]
    fn deterministic_runs() {
        let p = lemonade();
        let c = TrainerConfig::new(5_000, 42);
        let a = train(TrainingSource::Problem(&p), &c).unwrap();
        let b = train(TrainingSource::Problem(&p), &c).unwrap();
        assert_eq!(a, b);
        let other = train(TrainingSource::Problem(&p), &TrainerConfig::new(5_000, 43)).unwrap();
        assert_ne!(a.final_machine, other.final_machine);
    }

    #[test]
    fn csv_log_has_header_and_rows() {
        let p = lemonade();
        let run = train(TrainingSource::Problem(&p), &TrainerConfig::new(2_000, 3)).unwrap();
        let csv = run.log_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "iteration,swap,pocket_run_length,accuracy");
        assert_eq!(lines.len() as u64, run.swap_count + 1);
        assert_eq!(run.swaps.last().unwrap().run_length, run.pocket_run_length);
    }
}
