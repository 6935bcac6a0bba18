use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "ergo-homog", version, about = "Homogenized fluxes and ε-sweeps for degenerate parabolic problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the homogenized flux and the level-set report.
    HomogenizeFlux {
        #[command(flatten)]
        common: Common,
        /// Points of the u-grid in fbar.csv.
        #[arg(long, default_value_t = 400)]
        points: usize,
        #[arg(long, default_value_t = -4.0, allow_hyphen_values = true)]
        u_min: f64,
        #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
        u_max: f64,
    },
    /// Run every ε of a scenario against the homogenized solution.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Level-set measures of an algebra function.
    Levelset {
        #[command(flatten)]
        common: Common,
        /// Comma-separated levels; defaults to -1, -0.9, ..., 1.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        alpha: Vec<f64>,
    },
    /// Solve one problem of a scenario and write the trajectory.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Oscillation scale; the homogenized problem is solved when absent.
        #[arg(long)]
        eps: Option<f64>,
        /// Write every n-th time level.
        #[arg(long, default_value_t = 1)]
        cadence: usize,
    },
    /// Check the structural hypotheses of a flux.
    ValidateFlux {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
    },
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Named flux, scenario or algebra function.
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
    /// Scenario file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Recorded in every output header; overrides the scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_threads: Option<usize>,
    #[command(flatten)]
    pub tol: Tolerances,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Tolerances {
    /// Level-set mass above which a jump is rejected.
    #[arg(long)]
    pub tol_em0: Option<f64>,
    /// Interpolation tolerance of the f̄ tables.
    #[arg(long)]
    pub tol_interp: Option<f64>,
    /// Absolute quadrature tolerance.
    #[arg(long)]
    pub tol_quad: Option<f64>,
    /// Residual tolerance of the implicit steps.
    #[arg(long)]
    pub tol_newton: Option<f64>,
    /// Allowed boundary trace of the oscillating part.
    #[arg(long)]
    pub tol_boundary: Option<f64>,
}

impl Tolerances {
    /// `name=value` pairs of the overrides that were given, in a fixed order.
    pub fn pairs(&self) -> Vec<(&'static str, f64)> {
        [
            ("em0", self.tol_em0),
            ("interp", self.tol_interp),
            ("quad", self.tol_quad),
            ("newton", self.tol_newton),
            ("boundary", self.tol_boundary),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect()
    }
}
