use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hybridnav_cli::{cmd_plot, cmd_run, cmd_validate, Overrides};

#[derive(Parser)]
#[command(name = "hybridnav", version, about = "Hybrid feedback navigation among convex obstacles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate every (or a filtered set of) start position(s).
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
        /// Comma-separated indices or ranges, e.g. `0,2,5-7`.
        #[arg(long)]
        starts_filter: Option<String>,
    },
    /// Check a scenario file without simulating.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Draw trajectory CSVs over a scenario's obstacles.
    Plot {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long = "trajectory", required = true, num_args = 1..)]
        trajectories: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Colour the neighbourhood of this obstacle by region.
        #[arg(long)]
        regions: Option<usize>,
    },
}

#[derive(Args)]
struct OverrideArgs {
    /// Force sensor-based mode.
    #[arg(long)]
    sensor_based: bool,
    #[arg(long)]
    noise_std: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dwell: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    max_time: Option<f64>,
}

impl From<OverrideArgs> for Overrides {
    fn from(a: OverrideArgs) -> Self {
        Overrides {
            sensor_based: a.sensor_based,
            noise_std: a.noise_std,
            seed: a.seed,
            dwell: a.dwell,
            dt: a.dt,
            max_time: a.max_time,
        }
    }
}

fn main() -> ExitCode {
    let exit = match Cli::parse().command {
        Command::Run {
            scenario,
            out,
            overrides,
            starts_filter,
        } => cmd_run(&scenario, &out, &overrides.into(), starts_filter.as_deref()),
        Command::Validate { scenario, overrides } => cmd_validate(&scenario, &overrides.into()),
        Command::Plot {
            scenario,
            trajectories,
            out,
            regions,
        } => cmd_plot(&scenario, &trajectories, &out, regions),
    };
    ExitCode::from(exit as u8)
}
