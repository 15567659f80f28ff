use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sparsemap::{FactorSpec, Kind, LossKind, SolveStatus, SolverSettings};
use sparsemap_harness::compare::{compare_solvers, write_csv};
use sparsemap_harness::gradcheck::{grad_check, GradCheckConfig};
use sparsemap_harness::instance::parse_instances;
use sparsemap_harness::solve::{solve_batch, SolverChoice};
use sparsemap_harness::train::{self, TrainError, TrainerConfig};

const EXIT_FAILURE: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_MAX_ITER: u8 = 3;
const EXIT_INCONCLUSIVE: u8 = 4;
const EXIT_NON_FINITE: u8 = 5;

/// Sparse structured inference: solve, compare, check gradients, train.
#[derive(Parser)]
#[command(name = "sparsemap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve every instance of a JSON-lines file and write one JSON report per line.
    Solve {
        /// Instance file (`-` for stdin).
        input: PathBuf,
        #[arg(long, default_value = "activeset")]
        solver: SolverChoice,
        #[command(flatten)]
        stop: StopFlags,
        #[command(flatten)]
        out: OutFlag,
    },
    /// Run all four solvers on random standard-normal instances; per-iteration CSV.
    Compare {
        #[command(flatten)]
        structure: StructureFlags,
        #[arg(long, default_value_t = 1)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Record wall-clock times (otherwise the column is zero, keeping output deterministic).
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        stop: StopFlags,
        #[command(flatten)]
        out: OutFlag,
    },
    /// Compare Jacobian-vector products with central finite differences.
    Gradcheck {
        #[command(flatten)]
        structure: StructureFlags,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Standard deviation of the random potentials.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 1e-5)]
        eps: f64,
        /// Relative error at which a trial passes.
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
        /// Pass rate over support-stable trials required for exit code 0.
        #[arg(long, default_value_t = 0.95)]
        min_pass_rate: f64,
        #[command(flatten)]
        stop: StopFlags,
        #[command(flatten)]
        out: OutFlag,
    },
    /// Train a linear model on separable synthetic data; per-epoch CSV log.
    Train {
        #[arg(long, default_value = "sparsemap")]
        loss: LossKind,
        #[command(flatten)]
        structure: StructureFlags,
        #[arg(long, default_value_t = 200)]
        examples: usize,
        #[arg(long, default_value_t = 500)]
        epochs: usize,
        #[arg(long = "lr", default_value_t = 1.0)]
        learning_rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutFlag,
    },
}

#[derive(Args)]
struct StructureFlags {
    /// dense, sequence, arborescence or matching.
    #[arg(long)]
    kind: Kind,
    /// Comma-separated sizes, e.g. `5,3` for a length-5 sequence with 3 tags.
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
}

impl StructureFlags {
    fn spec(&self) -> Result<FactorSpec, Failure> {
        FactorSpec::from_dims(self.kind, &self.dims).map_err(|e| Failure::new(EXIT_PARSE, e.to_string()))
    }
}

#[derive(Args)]
struct StopFlags {
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    gap_tol: Option<f64>,
}

impl StopFlags {
    fn settings(&self, default_max_iter: usize) -> Result<SolverSettings, Failure> {
        let defaults = SolverSettings::default();
        let settings = SolverSettings {
            max_iter: self.max_iter.unwrap_or(default_max_iter),
            gap_tol: self.gap_tol.unwrap_or(defaults.gap_tol),
            ..defaults
        };
        settings.validate().map_err(|e| Failure::new(EXIT_PARSE, e.to_string()))?;
        Ok(settings)
    }
}

#[derive(Args)]
struct OutFlag {
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl OutFlag {
    fn writer(&self) -> Result<Box<dyn Write>, Failure> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(
                File::create(path).map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display())))?,
            )),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

fn io_failure(e: impl std::fmt::Display) -> Failure {
    Failure::new(EXIT_FAILURE, e.to_string())
}

fn read_input(path: &PathBuf) -> Result<String, Failure> {
    let mut text = String::new();
    if path.as_os_str() == "-" {
        io::stdin().read_to_string(&mut text).map_err(io_failure)?;
    } else {
        text = std::fs::read_to_string(path).map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display())))?;
    }
    Ok(text)
}

fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Solve { input, solver, stop, out } => {
            let settings = stop.settings(SolverSettings::default().max_iter)?;
            let instances = parse_instances(&read_input(&input)?).map_err(|e| Failure::new(EXIT_PARSE, e.to_string()))?;
            let reports = solve_batch(&instances, solver, &settings).map_err(|e| Failure::new(EXIT_FAILURE, e))?;
            let mut w = out.writer()?;
            for report in &reports {
                serde_json::to_writer(&mut w, report).map_err(io_failure)?;
                writeln!(w).map_err(io_failure)?;
            }
            w.flush().map_err(io_failure)?;
            let stalled = reports.iter().filter(|r| r.status == SolveStatus::MaxIter).count();
            if stalled > 0 {
                eprintln!("{stalled} instance(s) stopped at max_iter");
                return Ok(EXIT_MAX_ITER);
            }
            Ok(0)
        }
        Command::Compare {
            structure,
            instances,
            seed,
            timing,
            stop,
            out,
        } => {
            let spec = structure.spec()?;
            let settings = stop.settings(1000)?;
            let rows = compare_solvers(&spec, instances, seed, &settings, timing).map_err(io_failure)?;
            write_csv(&rows, out.writer()?).map_err(io_failure)?;
            Ok(0)
        }
        Command::Gradcheck {
            structure,
            trials,
            seed,
            scale,
            eps,
            tolerance,
            min_pass_rate,
            stop,
            out,
        } => {
            let mut cfg = GradCheckConfig::new(structure.spec()?, trials, seed);
            cfg.scale = scale;
            cfg.eps = eps;
            cfg.tolerance = tolerance;
            cfg.settings = stop.settings(cfg.settings.max_iter)?;
            let report = grad_check(&cfg).map_err(io_failure)?;
            let mut w = out.writer()?;
            serde_json::to_writer_pretty(&mut w, &report).map_err(io_failure)?;
            writeln!(w).map_err(io_failure)?;
            w.flush().map_err(io_failure)?;
            eprintln!(
                "{} of {} trials support-stable; pass rate {:.4}; max relative error {:.3e}",
                report.stable_trials, report.trials, report.pass_rate, report.max_relative_error
            );
            if report.inconclusive {
                eprintln!("inconclusive: fewer than half the trials were support-stable; try larger dims or another seed");
                return Ok(EXIT_INCONCLUSIVE);
            }
            if report.pass_rate < min_pass_rate || !report.single_support_exact_zero {
                return Ok(EXIT_FAILURE);
            }
            Ok(0)
        }
        Command::Train {
            loss,
            structure,
            examples,
            epochs,
            learning_rate,
            seed,
            out,
        } => {
            let cfg = TrainerConfig {
                loss,
                learning_rate,
                epochs,
                seed,
                examples,
                spec: structure.spec()?,
            };
            match train::train(&cfg) {
                Ok(log) => {
                    train::write_csv(&log, out.writer()?).map_err(io_failure)?;
                    Ok(0)
                }
                Err(e @ TrainError::NonFinite { .. }) => Err(Failure::new(EXIT_NON_FINITE, e.to_string())),
                Err(e @ TrainError::Config(_)) => Err(Failure::new(EXIT_PARSE, e.to_string())),
                Err(e) => Err(Failure::new(EXIT_FAILURE, e.to_string())),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(message) = sparsemap_harness::init_thread_pool() {
        eprintln!("error: {message}");
        return ExitCode::from(EXIT_PARSE);
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
