//! `prodist`: distributions of products of two random variables.
//!
//! Subcommands evaluate product densities and CDFs, compute moments, draw
//! seeded samples, fit product families to data, run simulation experiments
//! and analyze transaction tables (volume, price) end to end.

mod analyze;
mod commands;
mod error;
mod spec_io;
mod table;

use clap::Parser;
use commands::OutputFormat;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "prodist",
    version,
    about = "Densities, moments, sampling and fitting for products Z = XY of two random variables"
)]
struct Cli {
    /// RNG seed for sampling, fitting and experiments
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Relative tolerance for quadrature-backed evaluations
    #[arg(long, global = true)]
    quad_rel_tol: Option<f64>,
    /// Output path (stdout when omitted)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Subcommand)]
enum Command {
    /// Analyze a transaction table: correlation pretest, marginal fits and
    /// product fits of the transaction value done two ways
    Analyze(commands::AnalyzeArgs),
    /// Maximum-likelihood fit of a product family to a data column
    Fit(commands::FitArgs),
    /// Product density on a point or grid
    Pdf(commands::EvalArgs),
    /// Product distribution function on a point or grid
    Cdf(commands::EvalArgs),
    /// Mean and variance of the product
    Moments(commands::SpecArgs),
    /// Draw a seeded sample of products
    Sample(commands::SampleArgs),
    /// Run a simulation experiment from a JSON plan
    Experiment(commands::ExperimentArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(args) => {
            commands::cmd_analyze(args, cli.seed, cli.quad_rel_tol, cli.format, &cli.out)
        }
        Command::Fit(args) => {
            commands::cmd_fit(args, cli.seed, cli.quad_rel_tol, cli.format, &cli.out)
        }
        Command::Pdf(args) => commands::cmd_pdf(args, cli.quad_rel_tol, cli.format, &cli.out),
        Command::Cdf(args) => commands::cmd_cdf(args, cli.quad_rel_tol, cli.format, &cli.out),
        Command::Moments(args) => {
            commands::cmd_moments(args, cli.quad_rel_tol, cli.format, &cli.out)
        }
        Command::Sample(args) => {
            commands::cmd_sample(args, cli.seed, cli.quad_rel_tol, cli.format, &cli.out)
        }
        Command::Experiment(args) => {
            commands::cmd_experiment(args, cli.seed, cli.quad_rel_tol, cli.format, &cli.out)
        }
    };
    if let Err(e) = result {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
