use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "fracplasma",
    version,
    about = "Radial ground states of (-Δ)^s u = a (u - C)_+^p"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem and write the solution as JSON.
    Solve {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve every point of an (s, p) grid.
    Sweep {
        #[arg(long)]
        dim: usize,
        #[arg(long = "grid-s", value_delimiter = ',', required = true)]
        grid_s: Vec<f64>,
        #[arg(long = "grid-p", value_delimiter = ',', required = true)]
        grid_p: Vec<f64>,
        #[command(flatten)]
        numerics: NumericArgs,
        /// Output directory for the per-point files and `index.json`.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        threads: Option<usize>,
        #[command(flatten)]
        sampling: SamplingArgs,
    },
    /// Move a solution along its scaling family.
    Rescale {
        #[arg(long)]
        input: PathBuf,
        #[arg(long = "C", requires = "delta", conflicts_with = "mass")]
        c_new: Option<f64>,
        #[arg(long, requires = "c_new")]
        delta: Option<f64>,
        /// Target mass at fixed amplitude `a`.
        #[arg(long)]
        mass: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample `r, u, rho` as CSV.
    Profile {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the identity checks and report them as JSON.
    Validate {
        #[command(flatten)]
        source: SourceArgs,
        /// Check only the basis identities for (dim, s, trunc).
        #[arg(long = "basis-only")]
        basis_only: bool,
        #[arg(long = "probe-r", default_value_t = 50.0)]
        probe_r: f64,
        #[arg(long = "C", default_value_t = 2.0)]
        c_new: f64,
        #[arg(long, default_value_t = 3.0)]
        delta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print basis and problem constants.
    Constants {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 8)]
        trunc: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct NumericArgs {
    #[arg(long, default_value_t = fracplasma::solver::DEFAULT_TRUNC)]
    pub trunc: usize,
    #[arg(long, default_value_t = fracplasma::solver::DEFAULT_RESIDUAL_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = fracplasma::solver::DEFAULT_DP)]
    pub dp: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub s: f64,
    #[arg(long)]
    pub p: f64,
    #[command(flatten)]
    pub numerics: NumericArgs,
}

/// Either a solution file or inline solve parameters.
#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    #[arg(long, conflicts_with_all = ["dim", "s", "p"])]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[command(flatten)]
    pub numerics: NumericArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SamplingArgs {
    #[arg(long, default_value_t = 400)]
    pub points: usize,
    #[arg(long = "r-max", default_value_t = 3.0)]
    pub r_max: f64,
}
