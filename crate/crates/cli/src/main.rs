mod angle;
mod commands;
mod config;
mod error;
mod report;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use aklt_core::mbqc::{Axis, LogicalInput, Outcome};
use angle::Angle;
use config::{Format, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "aklt",
    version,
    about = "Photonic AKLT wire simulation and tomography"
)]
struct Cli {
    /// JSON run configuration (seed, noise, n0, output, format). Flags given
    /// on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Default, Args)]
struct NoiseArgs {
    /// Werner parameter of every source singlet, in [0, 1].
    #[arg(long)]
    werner_p: Option<f64>,
    /// Mode overlap at the symmetrizing splitters, in [0, 1].
    #[arg(long)]
    mode_overlap: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
struct OutputArgs {
    /// Output file; stdout when absent.
    #[arg(short, long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutcomeChoice {
    Plus,
    Minus,
    Id,
    /// Draw the outcome from the Born rule with `--seed`.
    Sample,
}

impl OutcomeChoice {
    fn forced(self) -> Option<Outcome> {
        match self {
            OutcomeChoice::Plus => Some(Outcome::Plus),
            OutcomeChoice::Minus => Some(Outcome::Minus),
            OutcomeChoice::Id => Some(Outcome::Id),
            OutcomeChoice::Sample => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Layout {
    Wide,
    Long,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LikelihoodArg {
    Poisson,
    Multinomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScalingArg {
    FoldIn,
    DivideCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    StateFidelity,
    GateTables,
    Fig3,
    SettingsTables,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build an AKLT wire and write it as JSON.
    Build {
        /// Number of qutrits (noisy chains are limited to 3).
        #[arg(long, value_parser = clap::value_parser!(u16).range(1..=aklt_core::chain::MAX_QUTRITS as i64))]
        n: u16,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run one rotation gate on a single-qutrit wire.
    Rotate {
        #[arg(long, value_parser = parse_input)]
        input: LogicalInput,
        #[arg(long, value_parser = parse_axis)]
        axis: Axis,
        /// Radians or a fraction of pi, e.g. `3pi/8`.
        #[arg(long, allow_hyphen_values = true)]
        theta: Angle,
        #[arg(long, value_enum)]
        outcome: OutcomeChoice,
        #[arg(long)]
        seed: Option<u64>,
        /// Use this single-qutrit wire (from `build`) instead of building one.
        #[arg(long, value_name = "FILE")]
        chain: Option<PathBuf>,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Corrected Bloch vectors over an angle grid for all three axes, as CSV.
    Scan {
        #[arg(long, value_parser = parse_input, default_value = "H")]
        input: LogicalInput,
        #[arg(long, value_parser = parse_outcome, default_value = "plus")]
        outcome: Outcome,
        /// Comma-separated angles; the ten-angle published grid by default.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        angles: Vec<Angle>,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Simulate tomography counts for a qubit-qutrit-qubit state file.
    TomoSimulate {
        /// State JSON written by `build --n 1`.
        state: PathBuf,
        /// Global count scale N0.
        #[arg(long)]
        n0: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "wide")]
        layout: Layout,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Maximum-likelihood reconstruction from a count table.
    TomoFit {
        /// Count CSV, wide or long form.
        counts: PathBuf,
        /// `ideal` for the ideal AKLT state or a state JSON file.
        #[arg(long)]
        target: Option<String>,
        /// Monte-Carlo resampling trials for error bars on the fidelity.
        #[arg(long, requires = "target")]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "poisson")]
        likelihood: LikelihoodArg,
        #[arg(long, value_enum, default_value = "fold-in")]
        scaling: ScalingArg,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Rerun a published result and compare.
    Reproduce {
        #[arg(value_enum)]
        which: Which,
        /// Count table to use instead of the bundled transcription.
        #[arg(long, value_name = "FILE")]
        data: Option<PathBuf>,
        /// Monte-Carlo trials (state-fidelity); 0 skips the error bars.
        #[arg(long, default_value_t = aklt_core::tomography::monte_carlo::DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Readout count scale for the simulated gate campaign.
        #[arg(long)]
        n0: Option<f64>,
        #[command(flatten)]
        noise: NoiseArgs,
        /// Report format.
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Also write the underlying data table as CSV.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
}

fn parse_input(s: &str) -> Result<LogicalInput, String> {
    s.parse()
}

fn parse_axis(s: &str) -> Result<Axis, String> {
    s.parse()
}

fn parse_outcome(s: &str) -> Result<Outcome, String> {
    s.parse()
}

fn run(cli: Cli) -> error::Result<()> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    commands::dispatch(cli.command, &cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.exit_code() == 2 {
                eprintln!("\nFor more information, try '--help'.");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
