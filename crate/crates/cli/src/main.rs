use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use doublewell_cli::{execute, Command, Invocation};

#[derive(Parser)]
#[command(name = "doublewell", version, about = "Double-well open-system simulator")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Numeric and analytic initial current slope.
    Slope(Common),
    /// Master-equation evolution of the current and state diagnostics.
    Evolve(Common),
    /// Stochastic unraveling of the singular-coupling dynamics.
    Unravel(Common),
    /// Numeric-versus-analytic suite; exits 0 only if every check passes.
    Compare(Common),
    /// Run the scenario named in the config.
    Run(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory, overriding `output.dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed overriding the config.
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (command, common) = match cli.command {
        Sub::Slope(c) => (Command::Slope, c),
        Sub::Evolve(c) => (Command::Evolve, c),
        Sub::Unravel(c) => (Command::Unravel, c),
        Sub::Compare(c) => (Command::Compare, c),
        Sub::Run(c) => (Command::Run, c),
    };
    let inv = Invocation {
        command,
        config: common.config,
        out: common.out,
        seed: common.seed,
        quiet: common.quiet,
    };
    match execute(&inv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("doublewell: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
