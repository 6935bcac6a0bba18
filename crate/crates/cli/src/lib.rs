//! Command-line front end: presets and scenario files in, headed CSV files out.

pub mod args;
mod commands;
mod output;

use std::fmt;

pub use args::{Cli, Command};
use ergo_homog::Error;

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments, unreadable or malformed input, unwritable output.
    Usage(String),
    /// The input parsed but violates a hypothesis (level sets, monotonicity, resolution).
    Validation(String),
    /// A solver did not converge.
    Solver(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Solver(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Validation(m) | Failure::Solver(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Config(_) | Error::UnknownPreset(_) | Error::InvalidArgument(_) => Failure::Usage(msg),
            Error::Em0Violation { .. }
            | Error::ValidationFailure(_)
            | Error::ResolutionTooCoarse(_)
            | Error::NonCoercive(_)
            | Error::InvalidProfile(_)
            | Error::IncompatibleRepresentations(_)
            | Error::MissingGradient => Failure::Validation(msg),
            Error::NonConvergedQuadrature { .. }
            | Error::NonlinearSolveFailure { .. }
            | Error::NeedsRegularization { .. }
            | Error::SigmaCauchyFailure { .. }
            | Error::SingularSystem(_) => Failure::Solver(msg),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    commands::dispatch(cli.command)
}
