//! Line-oriented text formats for problems (`nsb-problem v1`) and linear
//! machines (`lmachine v1`).
//!
//! Both formats are UTF-8, whitespace-separated, with `#` starting a comment
//! and blank lines ignored. Problem decimals are written at 12 significant
//! digits; machine weights at 17, which round-trips any `f64` exactly.

use std::fmt::Write as _;

use crate::error::{NsbError, Result};
use crate::machine::LinearMachine;
use crate::problem::{fold_priors, NsbProblem};

pub const PROBLEM_HEADER: &str = "nsb-problem v1";
pub const MACHINE_HEADER: &str = "lmachine v1";

fn err(line: usize, reason: impl Into<String>) -> NsbError {
    NsbError::Parse { line, reason: reason.into() }
}

/// Non-blank lines with comments stripped, paired with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = line.split_whitespace().collect();
        (!tokens.is_empty()).then_some((i + 1, tokens))
    })
}

fn parse_f64(line: usize, what: &str, token: &str) -> Result<f64> {
    token.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| err(line, format!("invalid {what} {token:?}")))
}

fn parse_count(line: usize, tokens: &[&str], key: &str) -> Result<usize> {
    if tokens.len() != 2 || tokens[0] != key {
        return Err(err(line, format!("expected `{key} <count>`")));
    }
    match tokens[1].parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(err(line, format!("invalid {key} count {:?}", tokens[1]))),
    }
}

/// Rounds to 12 significant digits and prints the shortest decimal for it.
fn decimal12(x: f64) -> String {
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

enum PriorSpec {
    Prior(f64),
    Weight(f64, f64),
}

struct FaultBlock {
    line: usize,
    name: String,
    prior: PriorSpec,
    pattern: Option<Vec<i8>>,
    noise: Option<Vec<f64>>,
}

pub fn parse_problem(text: &str) -> Result<NsbProblem> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, t)) if t.join(" ") == PROBLEM_HEADER => {}
        Some((l, _)) => return Err(err(l, format!("expected header `{PROBLEM_HEADER}`"))),
        None => return Err(err(0, "empty problem file")),
    }
    let (l, t) = lines.next().ok_or_else(|| err(0, "missing `inputs` line"))?;
    let inputs = parse_count(l, &t, "inputs")?;
    let (l, t) = lines.next().ok_or_else(|| err(0, "missing `faults` line"))?;
    let faults = parse_count(l, &t, "faults")?;

    let mut blocks: Vec<FaultBlock> = Vec::with_capacity(faults);
    for (l, t) in lines {
        match t[0] {
            "fault" => {
                let prior = match t.as_slice() {
                    [_, _, "prior", p] => {
                        let p = parse_f64(l, "prior", p)?;
                        if !(p > 0.0 && p <= 1.0) {
                            return Err(err(l, format!("prior out of range: {p} not in (0,1]")));
                        }
                        PriorSpec::Prior(p)
                    }
                    [_, _, "weight", f, u] => {
                        let f = parse_f64(l, "frequency", f)?;
                        let u = parse_f64(l, "importance", u)?;
                        if !(f > 0.0 && u > 0.0) {
                            return Err(err(l, "weight out of range: frequency and importance must be positive"));
                        }
                        PriorSpec::Weight(f, u)
                    }
                    _ => return Err(err(l, "expected `fault <name> prior <p>` or `fault <name> weight <f> <u>`")),
                };
                if blocks.len() == faults {
                    return Err(err(l, format!("more than {faults} faults")));
                }
                blocks.push(FaultBlock { line: l, name: t[1].to_string(), prior, pattern: None, noise: None });
            }
            "pattern" | "noise" => {
                let block = blocks.last_mut().ok_or_else(|| err(l, format!("`{}` before any fault", t[0])))?;
                let values = &t[1..];
                if values.len() != inputs {
                    return Err(err(l, format!("{} length mismatch at fault {}", t[0], block.name)));
                }
                if t[0] == "pattern" {
                    if block.pattern.is_some() {
                        return Err(err(l, format!("duplicate pattern for fault {}", block.name)));
                    }
                    let row = values
                        .iter()
                        .map(|&v| match v {
                            "1" => Ok(1),
                            "-1" => Ok(-1),
                            other => Err(err(l, format!("pattern entry {other:?} must be 1 or -1"))),
                        })
                        .collect::<Result<Vec<i8>>>()?;
                    block.pattern = Some(row);
                } else {
                    if block.noise.is_some() {
                        return Err(err(l, format!("duplicate noise for fault {}", block.name)));
                    }
                    let row = values
                        .iter()
                        .map(|v| {
                            let x = parse_f64(l, "noise", v)?;
                            if (0.0..=0.5).contains(&x) {
                                Ok(x)
                            } else {
                                Err(err(l, format!("noise out of range: {x} not in [0,1/2]")))
                            }
                        })
                        .collect::<Result<Vec<f64>>>()?;
                    block.noise = Some(row);
                }
            }
            other => return Err(err(l, format!("unexpected keyword {other:?}"))),
        }
    }
    if blocks.len() != faults {
        return Err(err(0, format!("expected {faults} faults, found {}", blocks.len())));
    }

    let is_weight = |b: &FaultBlock| matches!(b.prior, PriorSpec::Weight(..));
    let weighted = blocks.iter().filter(|b| is_weight(b)).count();
    if weighted != 0 && weighted != faults {
        let first = is_weight(&blocks[0]);
        let line = blocks.iter().find(|b| is_weight(b) != first).map_or(0, |b| b.line);
        return Err(err(line, "priors and weights cannot be mixed in one file"));
    }
    let priors = if weighted == faults {
        let (f, u): (Vec<f64>, Vec<f64>) = blocks
            .iter()
            .map(|b| match b.prior {
                PriorSpec::Weight(f, u) => (f, u),
                PriorSpec::Prior(_) => unreachable!(),
            })
            .unzip();
        fold_priors(&f, &u)?
    } else {
        blocks
            .iter()
            .map(|b| match b.prior {
                PriorSpec::Prior(p) => p,
                PriorSpec::Weight(..) => unreachable!(),
            })
            .collect()
    };

    let mut names = Vec::with_capacity(faults);
    let mut patterns = Vec::with_capacity(faults);
    let mut noise = Vec::with_capacity(faults);
    for b in blocks {
        patterns.push(b.pattern.ok_or_else(|| err(b.line, format!("missing pattern for fault {}", b.name)))?);
        noise.push(b.noise.ok_or_else(|| err(b.line, format!("missing noise for fault {}", b.name)))?);
        names.push(b.name);
    }
    NsbProblem::new(names, priors, patterns, noise)
}

pub fn serialize_problem(problem: &NsbProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{PROBLEM_HEADER}");
    let _ = writeln!(out, "inputs {}", problem.inputs());
    let _ = writeln!(out, "faults {}", problem.faults());
    for i in 0..problem.faults() {
        let _ = writeln!(out, "fault {} prior {}", problem.name(i), decimal12(problem.prior(i)));
        let pattern: Vec<String> = problem.pattern(i).iter().map(i8::to_string).collect();
        let _ = writeln!(out, "  pattern {}", pattern.join(" "));
        let noise: Vec<String> = problem.noise_row(i).iter().map(|&x| decimal12(x)).collect();
        let _ = writeln!(out, "  noise {}", noise.join(" "));
    }
    out
}

pub fn parse_machine(text: &str) -> Result<LinearMachine> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, t)) if t.join(" ") == MACHINE_HEADER => {}
        Some((l, _)) => return Err(err(l, format!("expected header `{MACHINE_HEADER}`"))),
        None => return Err(err(0, "empty weights file")),
    }
    let (l, t) = lines.next().ok_or_else(|| err(0, "missing `inputs` line"))?;
    let inputs = parse_count(l, &t, "inputs")?;
    let (l, t) = lines.next().ok_or_else(|| err(0, "missing `outputs` line"))?;
    let outputs = parse_count(l, &t, "outputs")?;

    let mut labels = Vec::with_capacity(outputs);
    let mut rows = Vec::with_capacity(outputs);
    for (l, t) in lines {
        if t[0] != "row" || t.len() < 2 {
            return Err(err(l, "expected `row <label> <bias> <w_1> ... <w_n>`"));
        }
        if t.len() != inputs + 3 {
            return Err(err(l, format!("row length mismatch at output {}: expected {} weights", t[1], inputs + 1)));
        }
        if rows.len() == outputs {
            return Err(err(l, format!("more than {outputs} rows")));
        }
        labels.push(t[1].to_string());
        rows.push(t[2..].iter().map(|w| parse_f64(l, "weight", w)).collect::<Result<Vec<f64>>>()?);
    }
    if rows.len() != outputs {
        return Err(err(0, format!("expected {outputs} rows, found {}", rows.len())));
    }
    LinearMachine::new(labels, rows)
}

pub fn serialize_machine(machine: &LinearMachine) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MACHINE_HEADER}");
    let _ = writeln!(out, "inputs {}", machine.inputs());
    let _ = writeln!(out, "outputs {}", machine.outputs());
    for (label, row) in machine.labels().iter().zip(machine.rows()) {
        let ws: Vec<String> = row.iter().map(|w| format!("{w:.16e}")).collect();
        let _ = writeln!(out, "row {label} {}", ws.join(" "));
    }
    out
}
