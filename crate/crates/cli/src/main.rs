//! `fspec`: batch driver for the factoring-spectrum toolkit.

// `!(a >= b)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{FitArgs, GenArgs, InvertArgs, KdeArgs, ScaleArgs, SpectrumArgs, TrapCommand, UnfoldArgs};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "fspec", version, about = "Factorisation-ensemble spectra, spacing statistics and trap dynamics")]
struct Cli {
    /// Worker threads for data-parallel stages; outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON object of flag values; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample semiprimes and write their energy records.
    #[command(args_override_self = true)]
    Gen(GenArgs),
    /// Build the semiclassical line spectrum.
    #[command(args_override_self = true)]
    Spectrum(SpectrumArgs),
    /// Rescale a spectrum to another bit size.
    #[command(args_override_self = true)]
    Scale(ScaleArgs),
    /// Unfold record energies into spacings.
    #[command(args_override_self = true)]
    Unfold(UnfoldArgs),
    /// Fit spacings against the GUE, GOE and Poisson laws.
    #[command(args_override_self = true)]
    Fit(FitArgs),
    /// Kernel density of E - 1 with the asymptotic law alongside.
    #[command(args_override_self = true)]
    Kde(KdeArgs),
    /// Recover a factor of N from spectral levels.
    #[command(args_override_self = true)]
    Invert(InvertArgs),
    /// Trap dynamics.
    Trap {
        #[command(subcommand)]
        command: TrapCommand,
    },
}

fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    Ok(())
}

fn run(args: Vec<OsString>) -> Result<(), CliError> {
    let args = config::expand_config(args)?;
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // help and version requests also arrive here
            return if e.use_stderr() { Err(CliError::Usage(String::new())) } else { Ok(()) };
        }
    };
    configure_threads(cli.threads)?;
    match &cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Spectrum(a) => commands::spectrum(a),
        Command::Scale(a) => commands::scale(a),
        Command::Unfold(a) => commands::unfold_cmd(a),
        Command::Fit(a) => commands::fit(a),
        Command::Kde(a) => commands::kde_cmd(a),
        Command::Invert(a) => commands::invert(a),
        Command::Trap { command } => commands::trap(command),
    }
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(&e, CliError::Usage(m) if m.is_empty()) {
                eprintln!("fspec: {e}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
