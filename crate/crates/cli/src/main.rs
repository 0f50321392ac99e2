//! `dividend-opt`: optimal dividend barriers from a model JSON document.

mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::{EXIT_OK, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(
    name = "dividend-opt",
    version,
    about = "Optimal dividend barriers for surplus-dependent premiums"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Grid step (default: min(0.005, 0.01 * min(1/lambda, mean claim)))
    #[arg(long, value_parser = positive)]
    dx: Option<f64>,
    /// Grid end (default: planned from a coarse pass)
    #[arg(long, value_parser = positive)]
    xmax: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Locate the optimal barrier and write the value function.
    Barrier {
        config: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        /// Horizon of the speed-condition check
        #[arg(long, default_value_t = 100.0, value_parser = positive)]
        horizon: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Reproduce the six reference barrier tables.
    Tables {
        /// Table numbers to run (default: all six)
        #[arg(long = "which", value_parser = clap::value_parser!(u8).range(1..=6))]
        which: Vec<u8>,
        /// Grid step for every column
        #[arg(long, value_parser = positive)]
        dx: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check the HJB optimality conditions for a barrier.
    Verify {
        config: PathBuf,
        /// Barrier to test instead of the computed optimum
        #[arg(long, value_parser = non_negative)]
        barrier: Option<f64>,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 100.0, value_parser = positive)]
        horizon: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Monte-Carlo estimate of a value or exit functional.
    Simulate {
        config: PathBuf,
        /// Initial capital
        #[arg(long, value_parser = non_negative)]
        x: f64,
        #[arg(long, value_enum, default_value_t = Functional::Value)]
        functional: Functional,
        #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
        paths: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Time truncation (default: chosen from the discount rate)
        #[arg(long, value_parser = positive)]
        horizon: Option<f64>,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        streams: u64,
        /// Dividend barrier, or upper exit level for `two-sided`
        #[arg(long, value_parser = non_negative)]
        barrier: Option<f64>,
        /// Barrier JSON from `barrier`; adds an analytic comparison
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check the model assumptions.
    Validate {
        config: PathBuf,
        #[arg(long, default_value_t = 100.0, value_parser = positive)]
        horizon: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Functional {
    /// Discounted dividends plus penalty under a barrier
    Value,
    /// Expected discounted penalty at ruin, no dividends
    GerberShiu,
    /// Discounted probability of reaching the barrier before ruin
    TwoSided,
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be a positive number, got {s}"))
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be a non-negative number, got {s}"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = match cli.command {
        Command::Barrier {
            config,
            grid,
            horizon,
            out,
        } => commands::barrier(&config, grid.dx, grid.xmax, horizon, &out),
        Command::Tables { which, dx, out } => commands::tables(&which, dx, &out),
        Command::Verify {
            config,
            barrier,
            grid,
            horizon,
            out,
        } => commands::verify(&config, barrier, grid.dx, grid.xmax, horizon, &out),
        Command::Simulate {
            config,
            x,
            functional,
            paths,
            seed,
            horizon,
            streams,
            barrier,
            solution,
            out,
        } => {
            let request = commands::SimulateRequest {
                x,
                functional,
                paths,
                seed,
                horizon,
                streams: streams as usize,
                barrier,
                solution,
            };
            commands::simulate(&config, &request, &out)
        }
        Command::Validate {
            config,
            horizon,
            out,
        } => commands::validate(&config, horizon, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dividend-opt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
