//! `mlbn`: command-line front end for simulations, estimation on CSV data,
//! censuses and metric evaluation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tropical_mlbn::harness::{self, ExperimentConfig, Mode};
use tropical_mlbn::Error;

#[derive(Parser)]
#[command(
    name = "mlbn",
    version,
    about = "Tropical estimation of max-linear Bayesian networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Repeated simulation study, summarized per dimension.
    Simulate(Common),
    /// Structure estimate from a CSV file (`data.path`).
    Estimate(Common),
    /// Census of dual triangulations and their minimum covers.
    Census(Common),
    /// Compare two saved graphs (`metrics.truth`, `metrics.estimate`).
    Metrics(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    threads: Option<usize>,
    /// Config override, e.g. `--set d=[5,10] --set innovation.sd=2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn exit_code(e: &Error) -> u8 {
    if e.is_data_error() {
        2
    } else {
        1
    }
}

fn execute(mode: Mode, args: Common) -> Result<String, Error> {
    let mut cfg = ExperimentConfig::load(args.config.as_deref(), &args.overrides)?;
    cfg.mode = mode;
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    let out = harness::output_dir(args.out, &cfg);
    if args.threads == Some(0) {
        return Err(Error::Config("--threads must be positive".to_owned()));
    }
    harness::with_threads(args.threads, || harness::run(&cfg, &out))?
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Simulate(a) => (Mode::Simulate, a),
        Command::Estimate(a) => (Mode::Estimate, a),
        Command::Census(a) => (Mode::Census, a),
        Command::Metrics(a) => (Mode::Metrics, a),
    };
    match execute(mode, args) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
