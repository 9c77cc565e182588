//! `oscillab`: command-line front end for the oscillatory-integral laboratory.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::*;
use crate::config::{merge_config, CliError, CliResult, EXIT_CONFIG, EXIT_FAIL};

#[derive(Debug, Parser)]
#[command(name = "oscillab", version, about = "Principal-value oscillatory integrals across regularity classes")]
struct Cli {
    /// JSON file whose keys override the subcommand's flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the phase catalog
    ListPhases(ListPhases),
    /// Evaluate m(λ) for one phase at a list of frequencies
    ComputeM(ComputeM),
    /// Fit |m(λ)| or -Re m(λ) against a growth envelope
    VerifyGrowth(VerifyGrowth),
    /// Check the plateau growth window and ladder parity
    VerifyPlateau(VerifyPlateau),
    /// Compare Bang and Taylor–Legendre flat-point bounds
    VerifyFlatbound(VerifyFlatbound),
    /// Estimate the class constant from high-order derivatives
    VerifyDerivatives(VerifyDerivatives),
    /// Weight-sequence operations on a Carleman family
    Carleman(Carleman),
    /// Fit and check the van der Corput shell constant
    VdcCheck(VdcCheck),
    /// Random polynomial sweep of sup |m|
    PolySweep(PolySweep),
}

fn run(cli: Cli) -> CliResult<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let cfg = cli.config.as_deref();
    match cli.command {
        Command::ListPhases(a) => list_phases(&merge_config(a, cfg, "list-phases")?),
        Command::ComputeM(a) => compute_m(&merge_config(a, cfg, "compute-m")?),
        Command::VerifyGrowth(a) => verify_growth(&merge_config(a, cfg, "verify-growth")?),
        Command::VerifyPlateau(a) => verify_plateau(&merge_config(a, cfg, "verify-plateau")?),
        Command::VerifyFlatbound(a) => verify_flatbound(&merge_config(a, cfg, "verify-flatbound")?),
        Command::VerifyDerivatives(a) => verify_derivatives(&merge_config(a, cfg, "verify-derivatives")?),
        Command::Carleman(a) => carleman(&merge_config(a, cfg, "carleman")?),
        Command::VdcCheck(a) => vdc_check(&merge_config(a, cfg, "vdc-check")?),
        Command::PolySweep(a) => poly_sweep(&merge_config(a, cfg, "poly-sweep")?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL as u8),
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
