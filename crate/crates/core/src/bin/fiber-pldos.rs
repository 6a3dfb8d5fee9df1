use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fiber_pldos::io::{load_config, parse_config, write_atomic};
use fiber_pldos::pipeline::{error_line, run_command, RunOptions, Verb};
use fiber_pldos::Result;

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  usage error
  3  configuration error (unknown keys, bad values, missing sections)
  4  file read/write error
  5  malformed data file
  6  argument out of domain, or beam energy without a known penetration depth
  7  mode solver failed to find the HE11 root
  8  numerical failure (quadrature, group velocity)

Errors are reported on stderr as one line:
  error: code=<n> kind=<kind> msg=\"<message>\"";

/// Guided-mode PLDOS of vacuum-clad nanofibers and cathodoluminescence
/// scan models.
#[derive(Parser, Debug)]
#[command(name = "fiber-pldos", version, after_help = EXIT_CODES)]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when neither this nor output.path is set.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Omit the generation time from output headers.
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Energy (keV) to penetration depth (nm) table.
    #[arg(long, global = true)]
    depth_table: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print HE11 mode parameters as key=value lines.
    Mode,
    /// Normalized PLDOS versus size parameter for the configured radial rule.
    PldosSweep,
    /// Cascade-blurred spot scan across the fiber cross-section.
    CrossScan,
    /// PLDOS at the beam stopping point versus fiber diameter.
    DiameterSweep,
    /// Fit amplitude and center offset of the scan model to measured data.
    FitScan {
        /// CSV with y[nm], value and optional uncertainty columns.
        #[arg(long)]
        data: PathBuf,
    },
    /// Fit a Lorentzian to a spectrum.
    FitSpectrum {
        /// CSV with wavelength[nm], value and optional uncertainty columns.
        #[arg(long)]
        data: PathBuf,
    },
}

fn run(cli: &Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => load_config(path, cli.depth_table.as_deref())?,
        None => parse_config("", None, cli.depth_table.as_deref())?,
    };
    let (verb, data) = match &cli.command {
        Command::Mode => (Verb::Mode, None),
        Command::PldosSweep => (Verb::PldosSweep, None),
        Command::CrossScan => (Verb::CrossScan, None),
        Command::DiameterSweep => (Verb::DiameterSweep, None),
        Command::FitScan { data } => (Verb::FitScan, Some(data.as_path())),
        Command::FitSpectrum { data } => (Verb::FitSpectrum, Some(data.as_path())),
    };
    let options = RunOptions {
        data,
        timestamp: !cli.no_timestamp,
    };
    let text = run_command(verb, &config, &options)?;
    match cli.output.as_ref().or(config.output.as_ref()) {
        Some(path) => write_atomic(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
