use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tasdip::cli::{self, CmdError, ExperimentSpec};
use tasdip::solver::{Policy, SolverMode};

#[derive(Parser)]
#[command(
    name = "tasdip",
    about = "Schedule and simulate time-sensitive traffic across TAS access networks over a DIP core"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory for reports.
    #[arg(long)]
    out: PathBuf,
    /// Seed override for message offsets, solver and interference streams.
    #[arg(long)]
    seed: Option<u64>,
    /// Shaping policy.
    #[arg(long, default_value = "full")]
    policy: Policy,
    /// Simulation horizon in hypercycles.
    #[arg(long)]
    horizon: Option<u32>,
    /// Solver mode override.
    #[arg(long)]
    solver: Option<SolverMode>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the scenario and write schedule.json + validation.json.
    Schedule {
        #[command(flatten)]
        common: Common,
    },
    /// Validate a schedule file against the scenario.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Schedule JSON to check.
        #[arg(long)]
        schedule: PathBuf,
    },
    /// Schedule (or load a schedule), compile device programs and simulate.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Simulate this schedule instead of solving.
        #[arg(long)]
        schedule: Option<PathBuf>,
    },
    /// Jitter vs interference utilization, scheduled and best-effort.
    SweepUtilization {
        #[command(flatten)]
        common: Common,
        /// Comma-separated utilization fractions, ascending.
        #[arg(long, value_delimiter = ',')]
        levels: Vec<f64>,
    },
    /// Acceptance ratio vs offered load under three policies.
    SweepLoad {
        #[command(flatten)]
        common: Common,
        /// Comma-separated offered loads in Mbps, ascending.
        #[arg(long, value_delimiter = ',')]
        levels: Vec<f64>,
    },
}

fn spec(common: Common, levels: Vec<f64>, schedule: Option<PathBuf>) -> ExperimentSpec {
    ExperimentSpec {
        scenario: common.scenario,
        out: common.out,
        seed: common.seed,
        levels,
        policy: common.policy,
        horizon: common.horizon,
        solver: common.solver,
        schedule,
    }
}

fn run() -> Result<(), CmdError> {
    match Cli::parse().cmd {
        Cmd::Schedule { common } => {
            let summary = cli::cmd_schedule(&spec(common, vec![], None))?;
            println!("{summary}");
        }
        Cmd::Validate { common, schedule } => {
            let feasible = cli::cmd_validate(&spec(common, vec![], Some(schedule)))?;
            if feasible {
                println!("feasible");
            } else {
                return Err(CmdError::Input("schedule is infeasible".into()));
            }
        }
        Cmd::Simulate { common, schedule } => {
            let summary = cli::cmd_simulate(&spec(common, vec![], schedule))?;
            println!("{summary}");
        }
        Cmd::SweepUtilization { common, levels } => {
            let csv = cli::cmd_sweep_utilization(&spec(common, levels, None))?;
            print!("{csv}");
        }
        Cmd::SweepLoad { common, levels } => {
            let csv = cli::cmd_sweep_load(&spec(common, levels, None))?;
            print!("{csv}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
