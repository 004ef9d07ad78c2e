//! `nsb`: command-line front end for NSB fault detection experiments.
//!
//! Exit codes: 0 success, 2 usage error, 3 input-format error, 4 guard
//! violation (e.g. too many inputs for exact enumeration).

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nsb_core::experiment::{render_reports, reports_to_json, reports_to_key_values};
use nsb_core::{
    bayes_network, compare_seeds, exact_expected_utility, gen_random, lemonade, monte_carlo_utility, network_to_nsb,
    parse_machine, parse_problem, serialize_machine, serialize_problem, train, BayesDecider, NsbError, NsbProblem,
    PriorMode, RandomProblemConfig, Reading, TrainerConfig, TrainingSource, UtilityReport,
};

/// Name that selects the built-in lemonade problem when no such file exists.
const LEMONADE: &str = "lemonade";

#[derive(Debug, Parser)]
#[command(name = "nsb", version, about = "Noisy single-pattern boolean fault detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a problem file against every invariant.
    Validate { problem: PathBuf },
    /// Write the built-in lemonade problem.
    Lemonade {
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Expected utility of the Bayes decision rule.
    BayesUtility {
        problem: PathBuf,
        #[arg(long, conflicts_with = "samples")]
        exact: bool,
        #[arg(long, requires = "seed")]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build the closed-form Bayes-optimal linear machine.
    Construct {
        problem: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        beta: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Recover an NSB problem for which a machine is Bayes-optimal.
    Invert {
        weights: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Train a linear machine with the pocket algorithm.
    Train {
        problem: PathBuf,
        #[command(flatten)]
        trainer: TrainerArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Swap log as CSV.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Classify one reading with a weights file.
    Classify {
        weights: PathBuf,
        /// Space-separated tokens in {-1, 0, 1}; 0 marks an unknown reading.
        #[arg(long, allow_hyphen_values = true)]
        reading: String,
    },
    /// Train pocket machines and compare them with the Bayes rule.
    Compare {
        problem: PathBuf,
        #[command(flatten)]
        trainer: TrainerArgs,
        #[arg(long)]
        samples: u64,
        /// Number of consecutive seeds to run, starting at --seed.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        /// Flat JSON report.
        #[arg(long)]
        json: Option<PathBuf>,
        /// `key = value` report.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Generate a random NSB problem.
    GenRandom {
        #[arg(long)]
        inputs: usize,
        #[arg(long)]
        faults: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0.05)]
        noise_min: f64,
        #[arg(long, default_value_t = 0.45)]
        noise_max: f64,
        #[arg(long, value_enum, default_value_t = PriorArg::Equal)]
        priors: PriorArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, clap::Args)]
struct TrainerArgs {
    #[arg(long)]
    iters: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long, requires = "dataset_size")]
    ratchet: bool,
    #[arg(long)]
    dataset_size: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
}

impl TrainerArgs {
    fn config(&self) -> TrainerConfig {
        TrainerConfig {
            iterations: self.iters,
            seed: self.seed,
            ratchet: self.ratchet,
            dataset_size: self.dataset_size,
            learning_rate: self.rate,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PriorArg {
    Equal,
    Dirichlet,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn input(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

impl From<NsbError> for Failure {
    fn from(e: NsbError) -> Self {
        let code = match e {
            NsbError::InvalidInput(_) | NsbError::InvalidConfig(_) => 2,
            NsbError::EnumerationGuard { .. } => 4,
            NsbError::Parse { .. }
            | NsbError::InvalidProblem(_)
            | NsbError::DimensionMismatch { .. }
            | NsbError::UnknownReading => 3,
        };
        Self { code, message: e.to_string() }
    }
}

type CmdResult = Result<(), Failure>;

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_problem(path: &Path) -> Result<NsbProblem, Failure> {
    if path == Path::new(LEMONADE) && !path.exists() {
        return Ok(lemonade());
    }
    let text = read_text(path)?;
    parse_problem(&text).map_err(|e| {
        let f = Failure::from(e);
        Failure { message: format!("{}: {}", path.display(), f.message), ..f }
    })
}

fn emit(output: Option<&Path>, text: &str) -> CmdResult {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::input(e.to_string())),
    }
}

fn utility_lines(r: &UtilityReport) -> String {
    let method = match r.method {
        nsb_core::UtilityMethod::Exact => "exact",
        nsb_core::UtilityMethod::MonteCarlo => "monte-carlo",
    };
    format!(
        "method = {method}\nutility = {:.4}\nfigure_of_merit = {:.1}\nstderr = {:.4}\nsamples = {}\n",
        r.value, r.figure_of_merit, r.stderr, r.sample_count
    )
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Validate { problem } => {
            let text = read_text(&problem)?;
            match parse_problem(&text) {
                Ok(_) => emit(None, "ok\n"),
                Err(NsbError::InvalidProblem(violations)) => {
                    Err(Failure::input(format!("{}: {}", problem.display(), violations.join("; "))))
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Lemonade { output } => emit(output.as_deref(), &serialize_problem(&lemonade())),
        Command::BayesUtility { problem, exact, samples, seed } => {
            let p = load_problem(&problem)?;
            let rule = BayesDecider::new(&p);
            let report = match (exact, samples, seed) {
                (true, None, _) => exact_expected_utility(&p, &rule)?,
                (false, Some(n), Some(s)) => monte_carlo_utility(&p, &rule, n, s)?,
                _ => return Err(Failure::usage("choose --exact or --samples N --seed S")),
            };
            emit(None, &utility_lines(&report))
        }
        Command::Construct { problem, alpha, beta, output } => {
            let p = load_problem(&problem)?;
            emit(output.as_deref(), &serialize_machine(&bayes_network(&p, alpha, beta)?))
        }
        Command::Invert { weights, output } => {
            let m = parse_machine(&read_text(&weights)?)?;
            let inv = network_to_nsb(&m)?;
            let text = format!("# beta {:.16e}\n{}", inv.beta, serialize_problem(&inv.problem));
            emit(output.as_deref(), &text)
        }
        Command::Train { problem, trainer, output, log } => {
            let p = load_problem(&problem)?;
            let run = train(TrainingSource::Problem(&p), &trainer.config())?;
            if let Some(path) = log {
                emit(Some(&path), &run.log_csv())?;
            }
            emit(output.as_deref(), &serialize_machine(&run.final_machine))
        }
        Command::Classify { weights, reading } => {
            let m = parse_machine(&read_text(&weights)?)?;
            let r = Reading::parse(&reading).map_err(|e| Failure::usage(e.to_string()))?;
            let fault = m.classify(&r)?;
            emit(None, &format!("{}\n", m.labels()[fault]))
        }
        Command::Compare { problem, trainer, samples, seeds, json, report } => {
            let p = load_problem(&problem)?;
            let reports = compare_seeds(&p, &trainer.config(), samples, seeds)?;
            if let Some(path) = json {
                emit(Some(&path), &reports_to_json(&reports))?;
            }
            if let Some(path) = report {
                emit(Some(&path), &reports_to_key_values(&reports))?;
            }
            emit(None, &render_reports(&reports))
        }
        Command::GenRandom { inputs, faults, seed, noise_min, noise_max, priors, output } => {
            let priors = match priors {
                PriorArg::Equal => PriorMode::Equal,
                PriorArg::Dirichlet => PriorMode::Dirichlet,
            };
            let cfg = RandomProblemConfig { inputs, faults, seed, noise_min, noise_max, priors };
            emit(output.as_deref(), &serialize_problem(&gen_random(&cfg)?))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("nsb: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
