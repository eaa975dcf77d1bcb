//! `phasegate`: phase-space entropy audits, mask generation, MRI and MIMO
//! studies, parameter selection and self-validation.
//!
//! Exit codes: 0 success, 2 I/O or format error, 3 invalid parameters,
//! 4 a validation contract failed.

mod commands;
mod common;
mod config;
mod error;
mod output;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(
    name = "phasegate",
    version,
    about = "Phase-space entropy audits for sampling and masking policies"
)]
struct Cli {
    /// JSON object whose keys mirror command flags; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<std::path::PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write synthetic multi-coil k-space phantoms.
    Phantom(commands::phantom::PhantomArgs),
    /// Generate a mask and its JSON sidecar.
    Maskgen(commands::maskgen::MaskgenArgs),
    /// Entropy change between reference and masked data.
    Audit(commands::audit::AuditArgs),
    /// Choose parametric line-density coefficients on calibration data.
    Select(commands::select::SelectArgs),
    /// Antenna-deactivation study on simulated channels.
    Mimo(commands::mimo::MimoArgs),
    /// Brute-force checks of the masking identities.
    Validate(commands::validate::ValidateArgs),
    /// Least-squares fit and Pearson correlation of two CSV columns.
    Correlate(commands::correlate::CorrelateArgs),
    /// Sweep window size, width and stride over line-mask families.
    Ablate(commands::ablate::AblateArgs),
}

fn run(argv: Vec<String>) -> CliResult<()> {
    let argv = config::expand(argv)?;
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => e.exit(),
            _ => return Err(CliError::Param(e.render().to_string())),
        },
    };
    match cli.command {
        Command::Phantom(a) => commands::phantom::run(a),
        Command::Maskgen(a) => commands::maskgen::run(a),
        Command::Audit(a) => commands::audit::run(a),
        Command::Select(a) => commands::select::run(a),
        Command::Mimo(a) => commands::mimo::run(a),
        Command::Validate(a) => commands::validate::run(a),
        Command::Correlate(a) => commands::correlate::run(a),
        Command::Ablate(a) => commands::ablate::run(a),
    }
}

fn main() {
    if let Err(e) = run(std::env::args().collect()) {
        eprintln!("phasegate: {}", e.to_string().trim_end());
        std::process::exit(e.exit_code());
    }
}
