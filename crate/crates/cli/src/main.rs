//! Command-line front end.
//!
//! Exit status: 0 on success, 2 when an invariant is violated (including an
//! inadmissible coefficient set), 1 on usage or input errors.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nemelec::diagnostics::csv::read_table;
use nemelec::diagnostics::InvariantContract;
use nemelec::driver::{self, Manifest, RunSummary, SimConfig, MANIFEST_FILE};
use nemelec::flow::validate_leslie;
use nemelec::Error;

#[derive(Parser, Debug)]
#[command(name = "nemelec", version, about = "Nematic electrolyte simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a simulation described by a TOML configuration file.
    Run {
        config: PathBuf,
        /// Output directory (default: `<config stem>.out` next to the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the Leslie coefficient admissibility condition.
    #[command(allow_negative_numbers = true)]
    ValidateCoefficients {
        #[arg(num_args = 6, value_names = ["A1", "A2", "A3", "A4", "A5", "A6"], required = true)]
        alpha: Vec<f64>,
    },
    /// Re-verify the invariant contracts of a diagnostics table.
    Check {
        csv: PathBuf,
        /// Manifest providing c_bar, lambda and the solver tolerance
        /// (default: manifest.json next to the table).
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, requires = "lambda")]
        c_bar: Option<f64>,
        #[arg(long, requires = "c_bar")]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 1e-10)]
        poisson_tol: f64,
    },
    /// Continue a run from a checkpoint file.
    Resume {
        checkpoint: PathBuf,
        /// Output directory (default: the checkpoint's directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Violation(Vec<String>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::StepRejected(_) | Error::DirectorBlowThrough { .. } | Error::NonNeutralCharge { .. } => {
                Failure::Violation(vec![e.to_string()])
            }
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Violation(list)) => {
            for v in &list {
                eprintln!("violation: {v}");
            }
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { config, out } => {
            let cfg = SimConfig::from_file(&config)?;
            let out = out.unwrap_or_else(|| default_out_dir(&config));
            report(driver::run(&cfg, &out)?)
        }
        Command::Resume { checkpoint, out } => report(driver::resume(&checkpoint, out.as_deref())?),
        Command::ValidateCoefficients { alpha } => {
            let alpha: [f64; 6] = alpha.try_into().expect("clap enforces six values");
            let verdict = validate_leslie(alpha);
            println!("admissible: {}", verdict.admissible);
            println!("delta: {}", verdict.delta);
            println!("delta_prime: {}", verdict.delta_prime);
            if verdict.admissible {
                Ok(())
            } else {
                Err(Failure::Violation(vec![format!("coefficients {alpha:?} are not admissible")]))
            }
        }
        Command::Check {
            csv,
            manifest,
            c_bar,
            lambda,
            poisson_tol,
        } => {
            let contract = match (c_bar, lambda) {
                (Some(c), Some(l)) => InvariantContract::new(c, l, poisson_tol),
                _ => {
                    let path = manifest.unwrap_or_else(|| csv.with_file_name(MANIFEST_FILE));
                    let m = Manifest::load(&path).map_err(|e| {
                        Failure::Usage(format!(
                            "cannot read manifest {}: {e}; pass --manifest or --c-bar and --lambda",
                            path.display()
                        ))
                    })?;
                    InvariantContract::new(m.config.c_bar, m.config.lambda, m.config.poisson_tol)
                }
            };
            let rows = read_table(BufReader::new(File::open(&csv).map_err(Error::from)?))?;
            let violations = contract.check_all(&rows);
            if violations.is_empty() {
                println!("ok: {} rows satisfy every invariant", rows.len());
                Ok(())
            } else {
                Err(Failure::Violation(violations))
            }
        }
    }
}

fn default_out_dir(config: &Path) -> PathBuf {
    let stem = config.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    config.with_file_name(format!("{stem}.out"))
}

fn report(summary: RunSummary) -> Result<(), Failure> {
    let m = &summary.manifest;
    println!(
        "{}: {} steps to t = {} (dt = {}), output in {}",
        m.status,
        m.steps,
        m.final_time,
        m.final_dt,
        summary.out_dir.display()
    );
    for w in &m.warnings {
        eprintln!("warning: {w}");
    }
    if m.violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violation(m.violations.clone()))
    }
}
