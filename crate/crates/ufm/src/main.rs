//! `ufm` command line: runs gradient-descent experiments on
//! unconstrained-features models, constructs and verifies closed-form
//! minimizers, drives the ridge attenuation experiment, and reports
//! collapse metrics for stored feature files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use ufm::cli::{
    cmd_asymptotic, cmd_metrics, cmd_oracle, cmd_run, cmd_verify, EXIT_DIVERGED, EXIT_USAGE,
};
use ufm::Error;

#[derive(Parser)]
#[command(
    name = "ufm",
    version,
    about = "Unconstrained-features models: experiments, oracles, and collapse metrics"
)]
struct Cli {
    /// Silence log output (overrides UFM_LOG).
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Path to the JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the config's output_path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override for the experiment and its initialization.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run gradient descent and write the trace and summary.
    Run(ExperimentArgs),
    /// Construct the closed-form minimizer and report its diagnostics.
    Oracle(ExperimentArgs),
    /// Run gradient descent and check it against the closed-form minimizer.
    Verify(ExperimentArgs),
    /// Run the Monte-Carlo ridge attenuation experiment.
    Asymptotic(ExperimentArgs),
    /// Report collapse metrics for a stored feature matrix.
    Metrics {
        /// Feature file (.csv extension for text, binary otherwise).
        features: PathBuf,
        /// Stored classifier for the NC3 metric (d x K transposed layout).
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Subtract the global feature mean before the ETF comparison.
        #[arg(long)]
        center: bool,
        /// Write the JSON report to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn init_logging(quiet: bool) {
    let env = env_logger::Env::default().filter_or("UFM_LOG", "warn");
    let mut builder = env_logger::Builder::from_env(env);
    if quiet {
        builder.filter_level(log::LevelFilter::Off);
    }
    let _ = builder.try_init();
}

fn dispatch(cli: &Cli) -> ufm::Result<i32> {
    match &cli.command {
        Command::Run(a) => cmd_run(&a.config, a.out.as_deref(), a.seed),
        Command::Oracle(a) => cmd_oracle(&a.config, a.out.as_deref(), a.seed),
        Command::Verify(a) => cmd_verify(&a.config, a.out.as_deref(), a.seed),
        Command::Asymptotic(a) => cmd_asymptotic(&a.config, a.out.as_deref(), a.seed),
        Command::Metrics {
            features,
            weights,
            center,
            out,
        } => cmd_metrics(features, weights.as_deref(), *center, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    init_logging(cli.quiet);
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Divergence { .. } => EXIT_DIVERGED,
                _ => EXIT_USAGE,
            };
            ExitCode::from(code as u8)
        }
    }
}
