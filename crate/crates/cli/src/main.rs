//! `polycontract`: simulate data, bound the consistent models, certify and
//! enlarge a contractive set, verify it and plot the result.

mod artifact;
mod commands;
mod config;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use polycontract::parallel::{with_workers, Execution};

use commands::{RunContext, Outcome};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "polycontract", version, about = "Data-driven robust contractive sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (JSON, "schema": 1). Built-in defaults otherwise.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for outputs and default inputs.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Worker threads (0 = all cores, 1 = sequential).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Override the configured contraction factor.
    #[arg(long = "lambda", global = true)]
    lambda: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Generate a dataset from the example system.
    Simulate,
    /// Build the consistency set and enumerate its vertices.
    Consistency,
    /// Compute and certify the scaled contractive set.
    Synthesize,
    /// Grow the certified set by admitted points.
    Enlarge,
    /// Re-check a certificate and simulate the closed loop; exit 1 on failure.
    Verify,
    /// Draw the sets as SVG.
    Plot,
}

fn run(cli: &Cli) -> Result<Outcome> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(l) = cli.lambda {
        config.lambda_w = l;
    }
    config.validate()?;
    let exec = if cli.jobs == 1 { Execution::Sequential } else { Execution::Parallel };
    let ctx = RunContext { config, out: cli.out.clone(), exec };
    with_workers(cli.jobs, || match cli.command {
        Command::Simulate => commands::simulate(&ctx),
        Command::Consistency => commands::consistency(&ctx),
        Command::Synthesize => commands::synthesize(&ctx),
        Command::Enlarge => commands::enlarge(&ctx),
        Command::Verify => commands::verify(&ctx),
        Command::Plot => commands::plot(&ctx),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            // A set that cannot be certified is a failed check, not a usage error.
            let uncertifiable = e
                .downcast_ref::<polycontract::Error>()
                .is_some_and(|e| matches!(e, polycontract::Error::NoCertificate(_)));
            ExitCode::from(if uncertifiable { 1 } else { 2 })
        }
    }
}
