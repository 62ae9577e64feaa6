use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use predictorlab::scenario::LoadError;
use predictorlab::{commands, parse_scenario, CliError};
use predictorlab_core::stability::Criterion;
use predictorlab_core::SimMode;

#[derive(Parser)]
#[command(name = "predictorlab", version, about = "Simulate and analyze a reset-corrected Smith predictor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory (created if missing)
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the scenario's mode
    #[arg(long)]
    mode: Option<SimMode>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the closed loop, write trace.csv and residuals.txt
    Simulate(Common),
    /// Gain checks and stability certificates, write analysis.txt
    Analyze(Common),
    /// Scan the reset period, write sweep.csv
    Sweep {
        #[command(flatten)]
        common: Common,
        /// First period on the grid (default: D + t-step)
        #[arg(long)]
        t_lo: Option<f64>,
        #[arg(long, default_value_t = 40.0)]
        t_hi: f64,
        #[arg(long, default_value_t = 0.5)]
        t_step: f64,
        #[arg(long, default_value = "spectral")]
        criterion: Criterion,
    },
    /// Run the identity checks, write verify.txt
    Verify(Common),
}

fn execute(cli: Cli) -> Result<String, CliError> {
    let common = match &cli.command {
        Command::Simulate(c) | Command::Analyze(c) | Command::Verify(c) => c,
        Command::Sweep { common, .. } => common,
    };
    let mut scenario = parse_scenario(&common.scenario).map_err(|e| match e {
        LoadError::Io { path, source } => CliError::Io {
            context: format!("reading {path}"),
            source,
        },
        invalid => CliError::Config(invalid.to_string()),
    })?;
    if let Some(mode) = common.mode {
        scenario.mode = mode;
    }
    let out = &common.out;
    match &cli.command {
        Command::Simulate(_) => commands::simulate(&scenario, out),
        Command::Analyze(_) => commands::analyze(&scenario, out),
        Command::Verify(_) => commands::verify(&scenario, out),
        Command::Sweep {
            t_lo,
            t_hi,
            t_step,
            criterion,
            ..
        } => {
            let lo = t_lo.unwrap_or(scenario.plant.delay() + t_step);
            commands::sweep(&scenario, out, lo, *t_hi, *t_step, *criterion)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            // usage errors are configuration errors, not divergence
            let _ = e.print();
            return ExitCode::from(3);
        }
    };
    match execute(cli) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
