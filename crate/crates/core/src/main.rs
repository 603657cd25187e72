use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use kornhardy::driver::{run_subcommand, Config, SweepChoice};
use kornhardy::presets::C6Mode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    CheckOperator,
    VerifyIdentities,
    SolveC6,
    VerifyInequalities,
    FullSuite,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::CheckOperator => "check-operator",
            Command::VerifyIdentities => "verify-identities",
            Command::SolveC6 => "solve-c6",
            Command::VerifyInequalities => "verify-inequalities",
            Command::FullSuite => "full-suite",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Strict,
    Weak,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sweep {
    Default,
    None,
}

/// Exact certification and numerical checks for weighted Korn-Hardy inequalities.
#[derive(Debug, Parser)]
#[command(name = "kornhardy", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Operator, bundle or C6 case preset.
    #[arg(long)]
    preset: Option<String>,
    /// Operator document to use instead of a preset.
    #[arg(long, value_name = "PATH")]
    operator_file: Option<PathBuf>,
    /// Quadrature refinement level of the coarser grid.
    #[arg(long, default_value_t = 0)]
    grid_level: u32,
    #[arg(long, value_enum, default_value = "none")]
    sweep: Sweep,
    /// Seed for frequency sampling and remainder pairs.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let operator_document = match &cli.operator_file {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => Some(t),
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", p.display());
                return ExitCode::from(2);
            }
        },
        None => None,
    };
    let config = Config {
        preset: cli.preset,
        operator_document,
        grid_level: cli.grid_level,
        sweep: match cli.sweep {
            Sweep::Default => SweepChoice::Default,
            Sweep::None => SweepChoice::None,
        },
        seed: cli.seed,
        mode: cli.mode.map(|m| match m {
            Mode::Strict => C6Mode::Strict,
            Mode::Weak => C6Mode::Weak,
        }),
    };
    let report = match run_subcommand(cli.command.name(), &config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    for (label, t) in &report.timings {
        eprintln!("{:>10.3} s  {label}", t.as_secs_f64());
    }
    eprintln!("status: {}", report.status);
    let json = report.to_json();
    match &cli.out {
        Some(p) => {
            if let Err(e) = std::fs::write(p, &json) {
                eprintln!("error: cannot write {}: {e}", p.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{json}"),
    }
    ExitCode::from(report.exit_code() as u8)
}
