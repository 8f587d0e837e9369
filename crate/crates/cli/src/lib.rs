//! Command-line front end: weight validators, analytic rate sweeps, rare-event
//! simulations and the numeric self-test, all writing CSV.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 a validated
//! check failed.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// `println!` unless `--quiet` was given.
macro_rules! say {
    ($ctx:expr, $($arg:tt)*) => {
        if !$ctx.quiet {
            println!($($arg)*);
        }
    };
}

pub mod config;
mod rate;
mod selftest;
mod simulate;
mod validate;

use config::{Assumption, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

const DEFAULT_OUT: &str = "results";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ldp_tails::Error),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Parser)]
#[command(
    name = "ldp-tails",
    version,
    about = "Large-deviation rates for weighted sums with stretched-exponential tails"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration; flags override its values
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing)
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Master seed; falls back to the config, then LDP_TAILS_SEED
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker threads for the simulations; never changes results
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
    /// Only write files; print nothing on success
    #[arg(long, short, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a weight scheme against conditions A or B
    ValidateWeights(ValidateArgs),
    /// Sweep a closed-form or Legendre-transform rate over x
    Rate(RateArgs),
    /// Run rare-event simulations and write the rate curves
    Simulate,
    /// Run the numeric identity suites
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Catalogue scheme name (e.g. uniform, kernel_epanechnikov, perturbed_uniform_0.25)
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long, value_enum)]
    pub assumption: Option<Assumption>,
    /// Grid of sample sizes, comma separated
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
    #[arg(long)]
    pub nu_max: Option<u32>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormulaTag {
    Stretched,
    Iid,
    RandomWeight,
    Kernel,
    MixedSign,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[arg(long, value_enum)]
    pub formula: Option<FormulaTag>,
    /// Deviation levels, comma separated
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    pub m: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub s1: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    /// epanechnikov, uniform, triangular or quartic
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub e_theta: Option<f64>,
    #[arg(long)]
    pub m_star: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Replace every suite tolerance with this value
    #[arg(long)]
    pub tolerance: Option<f64>,
}

/// Resolved context shared by the commands.
pub(crate) struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub seed_flag: Option<u64>,
    pub workers: Option<usize>,
    pub quiet: bool,
}

impl Context {
    pub fn create_out(&self) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.out).map_err(|source| CliError::Output {
            path: self.out.clone(),
            source,
        })
    }

    pub fn file(&self, name: &str) -> Result<std::fs::File, CliError> {
        let path = self.out.join(name);
        std::fs::File::create(&path).map_err(|source| CliError::Output { path, source })
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    let config = match &cli.global.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let out = cli
        .global
        .out
        .clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let workers = cli.global.workers.or(config.workers);
    if workers == Some(0) {
        return Err(CliError::Usage("--workers must be positive".into()));
    }
    let ctx = Context {
        config,
        out,
        seed_flag: cli.global.seed,
        workers,
        quiet: cli.global.quiet,
    };
    match cli.command {
        Command::ValidateWeights(args) => validate::run(&ctx, &args),
        Command::Rate(args) => rate::run(&ctx, &args),
        Command::Simulate => simulate::run(&ctx),
        Command::Selftest(args) => selftest::run(&ctx, &args),
    }
}
