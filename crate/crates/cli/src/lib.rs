//! Batch front end: spectral tables (`gamma`), verification suites
//! (`verify`) and truncated super Toeplitz matrices (`matrix`).
//!
//! Exit codes: 0 success, 1 configuration error, 2 numeric non-convergence,
//! 3 failed verification.
//!
//! Environment: `SUPERBERGMAN_THREADS` sets the worker count and
//! `SUPERBERGMAN_VERBOSITY` (`0`, `1`, `2`) the amount of progress written to
//! stderr. Command-line flags win over both.

pub mod config;
pub mod output;
pub mod presets;
pub mod suites;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use config::{Cli, RunConfig};

/// Stable process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Config = 1,
    NonConvergence = 2,
    VerificationFailed = 3,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) | CliError::Io(_) => ExitCode::Config,
            CliError::Numeric(_) => ExitCode::NonConvergence,
        }
    }
}

impl From<superbergman::Error> for CliError {
    fn from(e: superbergman::Error) -> Self {
        use superbergman::Error as E;
        match e {
            E::NonConvergence { .. } | E::BranchRisk(_) | E::Singular(_) => CliError::Numeric(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<presets::PresetError> for CliError {
    fn from(e: presets::PresetError) -> Self {
        CliError::Config(e.to_string())
    }
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to `diag`.
pub fn run<I, T>(args: I, diag: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { ExitCode::Config as i32 } else { ExitCode::Success as i32 };
            let _ = write!(diag, "{e}");
            return code;
        }
    };
    let verbosity = cli.verbosity();
    if let Some(threads) = cli.threads() {
        // A global pool can be set once per process; later calls keep the first.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let config = match RunConfig::resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(diag, "{e}");
            return e.exit_code() as i32;
        }
    };
    if verbosity > 0 {
        let _ = writeln!(diag, "superbergman {VERSION}: {} (p={}, q={}, nu={})", config.command, config.p, config.q, config.nu);
    }
    match output::execute(&config, cli.out(), diag, verbosity) {
        Ok(code) => code as i32,
        Err(e) => {
            let _ = writeln!(diag, "{e}");
            e.exit_code() as i32
        }
    }
}
