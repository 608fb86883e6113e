use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde_json::json;

use nrslice::error::Error;
use nrslice::report::{self, Mode, RunOptions};
use nrslice::scenario::{load_scenario_with, Overrides};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Simulate,
    Analytic,
    Both,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Simulate => Mode::Simulate,
            ModeArg::Analytic => Mode::Analytic,
            ModeArg::Both => Mode::Both,
        }
    }
}

/// Run a RAN slicing scenario: simulate a burst injection, solve the
/// steady state, or both.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum, default_value = "simulate")]
    mode: ModeArg,
    /// Override the number of replications.
    #[arg(long)]
    replications: Option<u32>,
    /// Override the base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Reporting grid step in milliseconds.
    #[arg(long)]
    grid_ms: Option<f64>,
    /// Write every replication's event log.
    #[arg(long)]
    emit_trajectories: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = json!({
                "error": e.kind(),
                "message": e.to_string(),
                "exit_code": e.exit_code(),
                "scenario": args.scenario,
            });
            eprintln!("{record}");
            if std::fs::create_dir_all(&args.out).is_ok() {
                let _ = std::fs::write(args.out.join("error.json"), format!("{record:#}\n"));
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(args: &Args) -> Result<(), Error> {
    let overrides = Overrides {
        replications: args.replications,
        base_seed: args.seed,
        grid_ms: args.grid_ms,
    };
    let loaded = load_scenario_with(&args.scenario, &overrides)?;
    let mut options = RunOptions::new(args.mode.into(), &args.out);
    options.emit_trajectories = args.emit_trajectories;
    let bundle = report::run(&loaded, &options)?;
    for f in &bundle.files {
        println!("{}", f.display());
    }
    Ok(())
}
