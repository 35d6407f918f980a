//! qng-certify: thresholds and loss tolerances for mode-intrinsic and
//! genuine non-Gaussian entanglement certification.

mod run;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "qng-certify",
    version,
    about = "Certification thresholds for non-Gaussian entanglement of two-mode bosonic states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (QNG_CERTIFY_JOBS overrides).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute certification thresholds for a target state.
    Threshold(RunArgs),
    /// Thresholds plus the minimal transmission keeping certification alive.
    LossTolerance(RunArgs),
    /// Sweep a target parameter and tabulate thresholds.
    Sweep(RunArgs),
    /// Run a named verification suite: oracles, figures-fast, figures-full.
    Verify {
        /// Suite name.
        suite: String,
        /// Seed for the randomized oracle checks.
        #[arg(long, default_value_t = qng_core::verify::DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// UTF-8 JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config output format (csv or json).
    #[arg(long)]
    format: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let jobs = std::env::var("QNG_CERTIFY_JOBS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .or(cli.jobs);
    if let Some(n) = jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("warning: could not set thread pool size: {e}");
        }
    }

    match cli.command {
        Command::Verify { suite, seed } => run::verify(&suite, seed),
        Command::Threshold(args) => run::run(run::CommandKind::Threshold, args_into(args)),
        Command::LossTolerance(args) => run::run(run::CommandKind::LossTolerance, args_into(args)),
        Command::Sweep(args) => run::run(run::CommandKind::Sweep, args_into(args)),
    }
}

fn args_into(a: RunArgs) -> run::Overrides {
    run::Overrides {
        config_path: a.config,
        seed: a.seed,
        out: a.out,
        format: a.format,
    }
}
