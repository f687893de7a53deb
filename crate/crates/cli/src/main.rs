//! Command-line driver: spectrum classification, norm engines and the
//! closure-construction checks, dispatched from a single JSON job document.
//!
//! Exit codes: 0 on success, 1 on errors, 2 when a theorem-level consistency
//! check fails (alarms).

mod commands;
mod config;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{is_alarm, CliError, CommandOutput};

#[derive(Parser)]
#[command(
    name = "sobspec",
    about = "Spectrum classification of constant-coefficient differential operators \
             on a localized Sobolev scale"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Path to the JSON job configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for JSON/CSV artifacts; stdout only when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Rendering written to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Pretty)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Pretty,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Per-lambda spectrum classes over the configured domain variants.
    Classify,
    /// Aggregated spectrum table with paired inclusion checks.
    Table,
    /// Dirichlet eigenvalues with the boundary-determinant audit.
    Eigen,
    /// Closure-construction convergence and boundary-term decay reports.
    ClosureVerify,
    /// Continuous-spectrum witness sequences and dual-side annihilators.
    Witness,
    /// H^s norms and the local seminorm family of a named profile.
    Norm,
    /// Ellipticity and hypoellipticity certificates of the symbol.
    Hypo,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Table => "table",
            Command::Eigen => "eigen",
            Command::ClosureVerify => "closure-verify",
            Command::Witness => "witness",
            Command::Norm => "norm",
            Command::Hypo => "hypo",
        }
    }
}

fn run(cli: &Cli) -> Result<CommandOutput, CliError> {
    let config_path = cli.config.as_ref().ok_or_else(|| {
        CliError::Config(config::ConfigError::Parse(
            "--config <path> is required".into(),
        ))
    })?;
    let document = fs::read_to_string(config_path)?;
    let cfg = config::parse_config(&document)?;
    match cli.command {
        Command::Classify => commands::run_classify(&cfg),
        Command::Table => commands::run_table(&cfg),
        Command::Eigen => commands::run_eigen(&cfg),
        Command::ClosureVerify => commands::run_closure_verify(&cfg),
        Command::Witness => commands::run_witness(&cfg),
        Command::Norm => commands::run_norm(&cfg),
        Command::Hypo => commands::run_hypo(&cfg),
    }
}

fn emit(cli: &Cli, out: &CommandOutput) -> Result<(), CliError> {
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(&out.json)?;
        fs::write(
            dir.join(format!("{}.json", cli.command.name())),
            json + "\n",
        )?;
        if let Some(csv) = &out.csv {
            fs::write(dir.join(format!("{}.csv", cli.command.name())), csv)?;
        }
    }
    match cli.format {
        Format::Json => {
            println!("{}", serde_json::to_string_pretty(&out.json)?);
        }
        Format::Csv => {
            if let Some(csv) = &out.csv {
                print!("{csv}");
            }
        }
        Format::Pretty => {
            print!("{}", out.pretty);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            if let Err(e) = emit(&cli, &out) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            if out.alarm {
                eprintln!("consistency alarm: a theorem-level check failed (see output)");
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if is_alarm(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
