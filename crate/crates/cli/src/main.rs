#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use zetadist_cli::{parse_config, run_command, CliError, Command};

#[derive(Parser)]
#[command(name = "zetadist", version, about = "Shintani zeta functions, Euler products and zeta distributions")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Overrides `action.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `action.tol`.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Value and truncation bound at `action.s`.
    Eval,
    /// Characteristic function over a t grid.
    Cf,
    /// Atom table of the distribution.
    Dist,
    /// Samples from the distribution.
    Sample,
    /// Dirichlet coefficients of an Euler product.
    Coeffs,
    /// Characteristic function against the exponential of the Lévy sum.
    LevyCheck,
    /// Zero scan of the characteristic function, or a rectangle count.
    Zeros,
    /// Describes a named construction.
    Special,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Eval => Command::Eval,
            Cmd::Cf => Command::Cf,
            Cmd::Dist => Command::Dist,
            Cmd::Sample => Command::Sample,
            Cmd::Coeffs => Command::Coeffs,
            Cmd::LevyCheck => Command::LevyCheck,
            Cmd::Zeros => Command::Zeros,
            Cmd::Special => Command::Special,
        }
    }
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::config("--config", "a configuration file is required"))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut cfg = parse_config(&text)?;
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.action.seed = seed;
    }
    if let Some(tol) = cli.tol {
        if !(tol > 0.0) {
            return Err(CliError::config("--tol", "tolerance must be positive"));
        }
        cfg.action.tol = tol;
    }
    Ok(run_command(cli.command.into(), &cfg)?.stdout)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => {
            if !cli.quiet {
                print!("{text}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
