//! Batch front-end: model and maneuver ingestion, attainable-set export,
//! maneuver replay with CSV emission, and allocation timing benchmarks.
//!
//! Exit codes are stable for scripting: 0 on success, 2 for usage or input
//! errors, 3 for numerical failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use control_alloc::allocator::AllocMode;

mod commands;

#[derive(Parser)]
#[command(
    name = "control-alloc",
    version,
    about = "Constraint-aware control allocation toolkit"
)]
struct Cli {
    /// Use a built-in dataset (available: f18).
    #[arg(long, global = true, value_name = "NAME")]
    builtin: Option<String>,

    /// Load a model file (see the book for the format).
    #[arg(long, global = true, value_name = "PATH", conflicts_with = "builtin")]
    model: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    #[value(name = "position_only", alias = "position-only")]
    PositionOnly,
    #[value(name = "rate_paper", alias = "rate-paper")]
    RatePaper,
    #[value(name = "rate_exact", alias = "rate-exact")]
    RateExact,
}

impl From<Mode> for AllocMode {
    fn from(mode: Mode) -> AllocMode {
        match mode {
            Mode::PositionOnly => AllocMode::PositionOnly,
            Mode::RatePaper => AllocMode::RatePaper,
            Mode::RateExact => AllocMode::RateExact,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Compare {
    Erpi,
    Pi,
    None,
}

#[derive(Subcommand)]
enum Command {
    /// Build the attainable moment set and export it as OFF files.
    Ams {
        #[arg(long, value_enum, default_value_t = Mode::PositionOnly)]
        mode: Mode,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Membership tolerance relative to the set circumradius.
        #[arg(long, value_name = "REL")]
        tolerance: Option<f64>,
    },
    /// Replay a maneuver through the allocator and the actuator bank,
    /// emitting inputs.csv, realized.csv, clip.csv, and timing.csv.
    Run {
        /// Maneuver CSV (header `t,cl,cm,cn`).
        #[arg(long, value_name = "PATH", conflicts_with = "synth")]
        maneuver: Option<PathBuf>,
        /// Use the built-in synthetic maneuver (5 s at 100 Hz).
        #[arg(long)]
        synth: bool,
        #[arg(long, value_enum, default_value_t = Mode::PositionOnly)]
        mode: Mode,
        /// Also allocate with a baseline method and record its inputs.
        #[arg(long, value_enum, default_value_t = Compare::None)]
        compare: Compare,
        /// Build the attainable-set geometry once instead of per solve.
        #[arg(long)]
        precompute: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Actuator integration step (s).
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Timing repetitions of the allocation pass.
        #[arg(long, default_value_t = 1)]
        reps: usize,
        /// Membership tolerance relative to the set circumradius.
        #[arg(long, value_name = "REL")]
        tolerance: Option<f64>,
    },
    /// Time repeated allocation passes over a maneuver, with and without
    /// precomputed geometry, and print a 1 ms-bucket histogram.
    Bench {
        #[arg(long, value_name = "PATH", conflicts_with = "synth")]
        maneuver: Option<PathBuf>,
        #[arg(long)]
        synth: bool,
        #[arg(long, value_enum, default_value_t = Mode::PositionOnly)]
        mode: Mode,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

/// Failures split by exit code.
pub enum CliError {
    /// Bad usage or unreadable/invalid input: exit 2.
    Input(String),
    /// Numerical failure inside the toolkit: exit 3.
    Numerical(String),
}

impl From<control_alloc::error::AllocError> for CliError {
    fn from(e: control_alloc::error::AllocError) -> Self {
        match e {
            // A mode the model cannot support is a usage problem, not a
            // numerical one.
            control_alloc::error::AllocError::ExactModeNeedsDiagonalA => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<control_alloc::error::SimError> for CliError {
    fn from(e: control_alloc::error::SimError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Ams {
            mode,
            out,
            tolerance,
        } => commands::ams(&cli, (*mode).into(), out, *tolerance),
        Command::Run {
            maneuver,
            synth,
            mode,
            compare,
            precompute,
            out,
            dt,
            reps,
            tolerance,
        } => commands::run(
            &cli,
            commands::RunArgs {
                maneuver: maneuver.clone(),
                synth: *synth,
                mode: (*mode).into(),
                compare: *compare,
                precompute: *precompute,
                out: out.clone(),
                dt: *dt,
                reps: *reps,
                tolerance: *tolerance,
            },
        ),
        Command::Bench {
            maneuver,
            synth,
            mode,
            reps,
            out,
        } => commands::bench(&cli, maneuver.clone(), *synth, (*mode).into(), *reps, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
