use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use quasineutral::checks::Mutation;
use quasineutral_cli::{cmd_check, cmd_order, cmd_run_ep, cmd_run_mhd, cmd_sweep, exit, exit_code, Overrides, RunConfig};

/// Euler-Poisson-MHD solvers and the quasi-neutral limit sweep.
#[derive(Parser)]
#[command(name = "quasineutral", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for the lambda sweep.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,

    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the compressible system.
    RunEp,
    /// Integrate the incompressible limit.
    RunMhd,
    /// Sweep lambda and fit the convergence rate.
    Sweep,
    /// Run the structural self-checks.
    Check {
        /// Inject a deliberate fault.
        #[arg(long, value_enum)]
        mutation: Option<MutationArg>,
    },
    /// Measure the temporal order of the integrator.
    Order,
}

#[derive(Clone, Copy, ValueEnum)]
enum MutationArg {
    FlipG2,
    SkipDealias,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(path) => match RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(exit_code(&e));
            }
        },
        None => RunConfig::default(),
    };
    let overrides = Overrides {
        workers: cli.workers.map(|w| w as usize),
        output: cli.output.clone(),
    };
    let result = match cli.command {
        Command::RunEp => cmd_run_ep(&cfg, &overrides),
        Command::RunMhd => cmd_run_mhd(&cfg, &overrides),
        Command::Sweep => cmd_sweep(&cfg, &overrides),
        Command::Check { mutation } => cmd_check(
            &cfg,
            mutation.map(|m| match m {
                MutationArg::FlipG2 => Mutation::FlipG2,
                MutationArg::SkipDealias => Mutation::SkipDealias,
            }),
        ),
        Command::Order => cmd_order(&cfg),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = exit_code(&e);
            debug_assert_ne!(code, exit::OK);
            ExitCode::from(code)
        }
    }
}
