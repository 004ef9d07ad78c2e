#![allow(dead_code)]

use nsb_core::{NsbProblem, Reading};
use rand::Rng;

/// Random problem with priors drawn uniformly then normalized. Noise entries
/// are uniform in [0, 1/2], with a share of exact 0 and exact 1/2 entries
/// when `edge_noise` is set.
pub fn random_problem<R: Rng>(rng: &mut R, n: usize, m: usize, edge_noise: bool) -> NsbProblem {
    let raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let priors = raw.iter().map(|p| p / total).collect();
    let patterns = (0..m).map(|_| (0..n).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect()).collect();
    let noise = (0..m)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let u: f64 = rng.gen();
                    if edge_noise && u < 0.1 {
                        0.0
                    } else if edge_noise && u < 0.15 {
                        0.5
                    } else {
                        rng.gen_range(0.01..0.5)
                    }
                })
                .collect()
        })
        .collect();
    let names = (1..=m).map(|i| format!("G{i}")).collect();
    NsbProblem::new(names, priors, patterns, noise).expect("random problem is valid")
}

/// Random problem whose noise row is shared by all faults.
pub fn random_shared_noise_problem<R: Rng>(rng: &mut R, n: usize, m: usize) -> NsbProblem {
    let p = random_problem(rng, n, m, false);
    let row: Vec<f64> = (0..n).map(|_| rng.gen_range(0.02..0.5)).collect();
    NsbProblem::with_shared_noise(p.names().to_vec(), p.priors().to_vec(), p.patterns().to_vec(), row).unwrap()
}

/// `P(V|G_i) P(G_i)` computed directly as a product of factors.
pub fn joint(problem: &NsbProblem, reading: &[i8], fault: usize) -> f64 {
    let mut p = problem.prior(fault);
    for (j, &v) in reading.iter().enumerate() {
        if v == 0 {
            continue;
        }
        let nz = problem.noise_row(fault)[j];
        p *= if v == problem.pattern(fault)[j] { 1.0 - nz } else { nz };
    }
    p
}

/// Brute-force maximum of the joint over faults.
pub fn max_joint(problem: &NsbProblem, reading: &[i8]) -> f64 {
    (0..problem.faults()).map(|i| joint(problem, reading, i)).fold(0.0, f64::max)
}

pub fn all_readings(n: usize) -> impl Iterator<Item = Reading> {
    (0..1u64 << n).map(move |i| Reading::from_index(i, n))
}
