//! `grot` — batch front end to the rotation/degree library: config-driven
//! trajectory integration, condition verification, fixed-point search via
//! topological degree, example-family dichotomy sweeps, backward
//! reachability, and rotation profiles. CSV/JSON/SVG artifacts only; no
//! interactive mode.
//!
//! Usage: `grot <command> <config.toml>`, plus `grot --print-schema` for
//! the documented (and runnable) configuration schema.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime integration
//! failure, 4 inconclusive result. All diagnostics go to standard error;
//! artifact paths are echoed on standard output.

mod commands;
mod config;
mod output;
mod svg;

use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use grot::GrotError;

use crate::config::RunConfig;
use crate::output::OutDir;

/// A failed run: which exit code to use and what to print on stderr.
pub struct Failure {
    pub code: u8,
    pub msg: String,
}

pub type CmdResult = Result<(), Failure>;

impl Failure {
    /// Configuration problems: unreadable/invalid config, bad parameters.
    pub fn config(msg: impl Display) -> Failure {
        Failure {
            code: 2,
            msg: msg.to_string(),
        }
    }

    /// Infrastructure problems while emitting artifacts (I/O, encoding).
    pub fn internal(msg: impl Display) -> Failure {
        Failure {
            code: 3,
            msg: msg.to_string(),
        }
    }

    /// The run finished but could not certify a conclusion.
    pub fn inconclusive(msg: impl Display) -> Failure {
        Failure {
            code: 4,
            msg: msg.to_string(),
        }
    }
}

impl From<GrotError> for Failure {
    fn from(e: GrotError) -> Failure {
        let code = match &e {
            // Parameter and domain violations are configuration mistakes.
            GrotError::InvalidParams { .. } | GrotError::OutOfTimeDomain { .. } => 2,
            // Outcomes that are neither success nor malfunction: the data
            // did not support a verdict at this resolution.
            GrotError::NoConvergence { .. }
            | GrotError::NotAdmissible { .. }
            | GrotError::UnderSampled { .. } => 4,
            // Everything else is a runtime integration/processing failure.
            _ => 3,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "grot",
    version,
    about = "Batch rotation-number, degree, and blow-up experiments for planar periodic ODEs",
    after_help = "Exit codes: 0 success, 2 configuration error, 3 integration failure, 4 inconclusive.\n\
                  Environment: GROT_OUT_DIR overrides the output directory; GROT_THREADS caps worker threads."
)]
struct Cli {
    /// Print the documented TOML configuration schema (itself a runnable
    /// config) and exit.
    #[arg(long)]
    print_schema: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory: trajectory.csv + summary.json.
    Integrate { config: PathBuf },
    /// Run condition checkers: verify.json.
    Verify { config: PathBuf },
    /// Degree harness + fixed-point search: report.json + portrait.svg.
    FindPeriodic { config: PathBuf },
    /// Example-family dichotomy table over (alpha, beta): sweep.csv.
    Sweep { config: PathBuf },
    /// Backward-reachability cloud: d_delta.json + cloud.csv + cloud.svg.
    DDelta { config: PathBuf },
    /// Generalized rotation on circles: profile.csv.
    Profile { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_schema {
        print!("{}", config::SCHEMA);
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!(
            "error: missing subcommand (integrate | verify | find-periodic | sweep | d-delta | profile); see --help"
        );
        return ExitCode::from(2);
    };
    if let Err(msg) = init_thread_pool() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match dispatch(&command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

/// Applies the `GROT_THREADS` override before any parallel work starts.
fn init_thread_pool() -> Result<(), String> {
    let Some(raw) = std::env::var_os("GROT_THREADS") else {
        return Ok(());
    };
    let text = raw.to_string_lossy();
    let n: usize = text
        .trim()
        .parse()
        .map_err(|_| format!("GROT_THREADS must be a positive integer, got {text:?}"))?;
    if n == 0 {
        return Err("GROT_THREADS must be at least 1".to_string());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("could not configure the thread pool: {e}"))
}

fn dispatch(command: &Command) -> CmdResult {
    let path = match command {
        Command::Integrate { config }
        | Command::Verify { config }
        | Command::FindPeriodic { config }
        | Command::Sweep { config }
        | Command::DDelta { config }
        | Command::Profile { config } => config,
    };
    let cfg = RunConfig::load(path).map_err(Failure::config)?;
    let out = OutDir::resolve(&cfg.run.out_dir).map_err(Failure::config)?;
    match command {
        Command::Integrate { .. } => commands::run_integrate(&cfg, &out),
        Command::Verify { .. } => commands::run_verify(&cfg, &out),
        Command::FindPeriodic { .. } => commands::run_find_periodic(&cfg, &out),
        Command::Sweep { .. } => commands::run_sweep(&cfg, &out),
        Command::DDelta { .. } => commands::run_d_delta(&cfg, &out),
        Command::Profile { .. } => commands::run_profile(&cfg, &out),
    }
}
