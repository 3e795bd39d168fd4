//! `spp`: transmission sweeps, resonances, band reports and oracle checks
//! for super periodic and Cantor-family potentials.

mod commands;
mod config;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spp_core::OverlapPolicy;

use config::{ConfigError, ExperimentConfig, Format};
use output::Table;

const EXIT_VERIFY: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_INVALID: u8 = 3;

#[derive(Parser)]
#[command(name = "spp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transmission, log10 T and Bloch arguments over the sweep grid.
    Transmission(Common),
    /// Cell and comb resonances on the k grid, with optional band widths.
    Resonances(Common),
    /// Allowed and forbidden intervals of every tier on the k grid.
    Bands(Common),
    /// Closed forms against the independent oracles; exits 1 on failure.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file, or `stdout`.
    #[arg(long, default_value = "stdout")]
    output: String,
    /// Overrides the configured format.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    /// Accept tiers whose period is shorter than the span they repeat.
    #[arg(long)]
    permissive_overlap: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Scale the closed-form transmission by `1 − REL` before comparing.
    #[arg(long, hide = true, value_name = "REL")]
    perturb_closed_form: Option<f64>,
}

fn load(common: &Common) -> Result<ExperimentConfig, ConfigError> {
    let text = match &common.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?,
        None => String::new(),
    };
    let mut config = ExperimentConfig::parse(&text)?;
    if common.permissive_overlap {
        config.overlap = OverlapPolicy::Permissive;
    }
    Ok(config)
}

fn emit(table: &Table, format: Format, target: &str) -> io::Result<()> {
    let mut out: Box<dyn Write> = if target == "stdout" || target == "-" {
        Box::new(BufWriter::new(io::stdout().lock()))
    } else {
        Box::new(BufWriter::new(File::create(target)?))
    };
    table.write(format, &mut out)?;
    out.flush()
}

fn run(cli: Cli) -> Result<bool, (u8, String)> {
    let (common, perturb) = match &cli.command {
        Command::Transmission(c) | Command::Resonances(c) | Command::Bands(c) => (c, None),
        Command::Verify(v) => (&v.common, v.perturb_closed_form),
    };
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| (EXIT_INVALID, e.to_string()))?;
    }
    let fail = |e: ConfigError| match e {
        ConfigError::Parse(m) => (EXIT_PARSE, format!("config error: {m}")),
        ConfigError::Invalid(m) => (EXIT_INVALID, format!("invalid input: {m}")),
    };
    let config = load(common).map_err(fail)?;
    let format = common.format.or(config.format).unwrap_or_default();
    let (table, passed) = match &cli.command {
        Command::Transmission(_) => (commands::transmission(&config).map_err(fail)?, true),
        Command::Resonances(_) => (commands::resonances(&config).map_err(fail)?, true),
        Command::Bands(_) => (commands::bands(&config).map_err(fail)?, true),
        Command::Verify(_) => commands::verify(&config, perturb).map_err(fail)?,
    };
    match emit(&table, format, &common.output) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => {
            Err((EXIT_INVALID, format!("cannot write {}: {e}", common.output)))
        }
        _ => Ok(passed),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(EXIT_VERIFY)
        }
        Err((code, message)) => {
            eprintln!("{message}");
            ExitCode::from(code)
        }
    }
}
