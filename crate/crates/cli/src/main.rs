// Copyright 2026 The qho-control Authors
// SPDX-License-Identifier: Apache-2.0

//! `qho-control` command-line front end.
//!
//! Exit codes: 0 success, 1 malformed input or configuration, 2 restart
//! budget exhausted, 3 input protocol is not a solution, 4 corrector failed.
//! Failures are reported on standard error as one line of JSON.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qho_control::Error;

mod commands;
mod config;

#[derive(Debug, Parser)]
#[command(
    name = "qho-control",
    version,
    about = "Frictionless driving protocols for a frequency-controlled oscillator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Search for an M-pulse protocol with infidelity below threshold.
    Solve {
        /// Run configuration (JSON).
        config: PathBuf,
        /// Overrides the configured random seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Solution protocol (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Descent trajectory (CSV).
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Navigate a solution towards smoother pulse sequences.
    Smooth(NavigateArgs),
    /// Navigate a solution towards a chunk-constant sequence and collapse it.
    Compress(NavigateArgs),
    /// Eigenvalues of the infidelity Hessian, largest first.
    Spectrum {
        #[arg(long)]
        input: PathBuf,
        /// CSV destination; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Conservation diagnostics of a protocol.
    Verify {
        #[arg(long)]
        input: PathBuf,
    },
    /// Sample three-pulse solutions and group them into solution curves.
    Levelset {
        config: PathBuf,
        #[arg(long, default_value_t = 500)]
        seeds: usize,
        /// Base seed; solve k uses `seed + k`.
        #[arg(long)]
        seed: Option<u64>,
        /// Labeled solution cloud (CSV).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Traced curves (CSV).
        #[arg(long)]
        curves: Option<PathBuf>,
    },
    /// Phase-resolved objective `J(θ)` over a uniform grid.
    ThetaScan {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = qho_control::objectives::DEFAULT_THETA_POINTS)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum CostKind {
    C1,
    C2,
}

#[derive(Debug, Args)]
struct NavigateArgs {
    /// Solution protocol to start from (JSON).
    #[arg(long)]
    input: PathBuf,
    /// Optional run configuration supplying navigation settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Secondary cost; `smooth` defaults to c1 and `compress` to c2.
    #[arg(long, value_enum)]
    cost: Option<CostKind>,
    /// Chunk count for c2.
    #[arg(long, default_value_t = 2)]
    chunks: usize,
    /// Refinement factors applied in turn whenever navigation stalls.
    #[arg(long, value_delimiter = ',')]
    double: Option<Vec<usize>>,
    /// Final protocol (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Navigation trajectory (CSV).
    #[arg(long)]
    trajectory: Option<PathBuf>,
    /// Collapsed protocol (JSON), written by `compress` only.
    #[arg(long)]
    collapsed: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Config(String),
    Io { path: PathBuf, message: String },
    Usage(String),
}

impl CliError {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::RestartBudgetExhausted { .. }) => 2,
            CliError::Core(Error::NotASolution { .. }) => 3,
            CliError::Core(Error::CorrectorFailed { .. }) => 4,
            _ => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => match e {
                Error::NonPositiveFrequency { .. } => "non_positive_frequency",
                Error::NonFiniteEntry { .. } => "non_finite_entry",
                Error::InvalidFactor => "invalid_factor",
                Error::IndivisibleChunking { .. } => "indivisible_chunking",
                Error::NegativeOccupation(_) => "negative_occupation",
                Error::EmptyProtocol => "empty_protocol",
                Error::NonSymplectic { .. } => "non_symplectic",
                Error::WrongDimension { .. } => "wrong_dimension",
                Error::NotASolution { .. } => "not_a_solution",
                Error::RestartBudgetExhausted { .. } => "restart_budget_exhausted",
                Error::CorrectorFailed { .. } => "corrector_failed",
                Error::InvalidConfig(_) => "invalid_config",
                Error::Json(_) => "malformed_json",
            },
            CliError::Config(_) => "invalid_config",
            CliError::Io { .. } => "io",
            CliError::Usage(_) => "usage",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Config(m) | CliError::Usage(m) => m.clone(),
            CliError::Io { path, message } => format!("{}: {message}", path.display()),
        }
    }

    fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "message": self.message(),
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        CliError::Core(err)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve {
            config,
            seed,
            out,
            trajectory,
        } => commands::solve(&config, seed, out, trajectory),
        Command::Smooth(args) => commands::navigate(args, CostKind::C1, false),
        Command::Compress(args) => commands::navigate(args, CostKind::C2, true),
        Command::Spectrum { input, out } => commands::spectrum(&input, out),
        Command::Verify { input } => commands::verify(&input),
        Command::Levelset {
            config,
            seeds,
            seed,
            out,
            curves,
        } => commands::levelset(&config, seeds, seed, out, curves),
        Command::ThetaScan { input, points, out } => commands::theta_scan(&input, points, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) if !err.use_stderr() => {
            // --help and --version
            let _ = err.print();
            return ExitCode::SUCCESS;
        }
        Err(err) => {
            let message = err.to_string();
            let first = message
                .lines()
                .next()
                .unwrap_or_default()
                .trim_start_matches("error: ");
            let err = CliError::Usage(first.to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code());
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code())
        }
    }
}
