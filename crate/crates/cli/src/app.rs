//! Subcommand dispatch.
//!
//! Exit codes: 0 on success, 1 on a failed run or oracle violation, 2 on
//! usage or configuration errors.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use ghzsim_core::protocols::ProtocolKind;
use ghzsim_core::sweep::{
    reproduce_figure, run_sweep, sweep_row, write_rows, DetuningModel, FigureSettings,
    OutputFormat, SweepFailure,
};

use crate::checks::{run_check, Oracle};
use crate::config::{parse_config, parse_format, RunConfig};

pub const THREADS_ENV: &str = "GHZSIM_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "ghzsim",
    version,
    about = "GHZ magnetometry under detuning: protocols, sweeps and oracle checks"
)]
pub struct Cli {
    /// `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `master_seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Repeat for more diagnostics on stderr.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Runs one protocol instance and prints its row.
    Run(RunArgs),
    /// Runs the configured sweep.
    Sweep(SweepArgs),
    /// Writes the two panel tables of a figure.
    Figures(FigureArgs),
    /// Runs an oracle suite; exits 1 on any violation.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub protocol: ProtocolKind,
    #[arg(long = "n")]
    pub n_spins: usize,
    /// Uniform detuning; overrides the configured model.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long, value_parser = format_arg)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Output file; stdout if absent and not configured.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = format_arg)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub which: u8,
    #[arg(long, default_value = "figures")]
    pub out_dir: PathBuf,
    /// Largest N in the sweep.
    #[arg(long, default_value_t = 2000)]
    pub n_max: usize,
    #[arg(long, value_parser = format_arg)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long, value_enum)]
    pub oracle: Oracle,
    /// Number of random cases for the dense oracle.
    #[arg(long, default_value_t = 100)]
    pub cases: usize,
}

fn format_arg(s: &str) -> Result<OutputFormat, String> {
    parse_format(s)
}

enum Failure {
    Usage(anyhow::Error),
    Run(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Run(e.into())
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(Failure::Usage)?;
            parse_config(&text)
                .with_context(|| format!("in {}", path.display()))
                .map_err(Failure::Usage)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.sweep.master_seed = seed;
    }
    config.verbosity = config.verbosity.max(cli.verbose);
    Ok(config)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t >= 1)
        .ok_or_else(|| {
            Failure::Usage(anyhow::anyhow!(
                "{THREADS_ENV} must be a positive integer, got '{value}'"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring worker threads")?;
    Ok(())
}

fn report_failures(failures: &[SweepFailure]) {
    for f in failures {
        match f.n_spins {
            Some(n) => eprintln!("warning: {} N={n} skipped: {}", f.protocol, f.message),
            None => eprintln!("warning: {} skipped: {}", f.protocol, f.message),
        }
    }
}

fn open_output(path: Option<&PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    configure_threads()?;
    let config = load_config(cli)?;
    match &cli.command {
        Command::Run(args) => {
            let mut sweep = config.sweep.clone();
            if let Some(delta) = args.delta {
                sweep.detuning = DetuningModel::Uniform(delta);
            }
            if args.n_spins == 0 {
                return Err(Failure::Usage(anyhow::anyhow!("--n must be at least 1")));
            }
            let row = sweep_row(&sweep, args.protocol, args.n_spins)?;
            let format = args.format.unwrap_or(config.format);
            write_rows(&[row], io::stdout().lock(), format)?;
        }
        Command::Sweep(args) => {
            let output = run_sweep(&config.sweep)?;
            report_failures(&output.failures);
            let path = args.out.as_ref().or(config.output.as_ref());
            let format = args.format.unwrap_or(config.format);
            write_rows(&output.rows, open_output(path)?, format)?;
            if config.verbosity > 0 {
                eprintln!("{} rows", output.rows.len());
            }
        }
        Command::Figures(args) => {
            let settings = FigureSettings {
                tau: config.sweep.tau,
                omega: config.sweep.omega,
                trials: config.sweep.trials,
                master_seed: config.sweep.master_seed,
                phi1: config.sweep.phi1,
                n_max: args.n_max,
                format: args.format.unwrap_or(config.format),
            };
            if settings.n_max == 0 {
                return Err(Failure::Usage(anyhow::anyhow!(
                    "--n-max must be at least 1"
                )));
            }
            let output = reproduce_figure(args.which, &settings, &args.out_dir)?;
            report_failures(&output.failures);
            for path in &output.paths {
                println!("{}", path.display());
            }
        }
        Command::Check(args) => {
            let report = run_check(args.oracle, args.cases, config.sweep.master_seed)?;
            print!("{report}");
            if config.verbosity > 0 {
                for line in &report.lines {
                    eprintln!(
                        "{}: {:e} (tolerance {:e})",
                        line.label, line.error, line.tolerance
                    );
                }
            }
            if !report.passed() {
                return Err(Failure::Run(anyhow::anyhow!(
                    "{:?} oracle violated",
                    args.oracle
                )));
            }
        }
    }
    Ok(())
}

pub fn main_with(cli: Cli) -> ExitCode {
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
