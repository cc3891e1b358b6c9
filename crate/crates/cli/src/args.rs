use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "sirsvp", version, about = "SIRS model with varying population: analysis, simulation and Lyapunov certificates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Threshold quantities, equilibria, stability regime and population fate.
    Analyze(AnalyzeArgs),
    /// Integrate one trajectory.
    Simulate(SimulateArgs),
    /// Grid-check the Lyapunov certificate and the invariance of Omega.
    Verify(VerifyArgs),
    /// One-parameter sweep.
    Sweep(SweepArgs),
}

/// Parameter source: a JSON file, inline flags, or a file with inline overrides.
#[derive(Debug, Args, Clone)]
pub struct ParamArgs {
    /// Flat JSON object with keys b, beta, nu, delta, p, alpha, mu0, k.
    #[arg(long, value_name = "FILE")]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long)]
    pub k: Option<f64>,
}

#[derive(Debug, Args, Clone)]
pub struct OutputArgs {
    /// Write to this file instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Omit the metadata block (tool version, timestamp) for byte-comparable output.
    #[arg(long)]
    pub no_meta: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SystemArg {
    Full,
    Fraction,
    Reduced,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_enum, default_value = "reduced")]
    pub system: SystemArg,
    /// Initial susceptible count (full system).
    #[arg(long)]
    pub x0: Option<f64>,
    /// Initial infectious count (full system).
    #[arg(long)]
    pub y0: Option<f64>,
    /// Initial removed count (full system).
    #[arg(long)]
    pub z0: Option<f64>,
    /// Initial susceptible fraction (fraction system; defaults to 1 - I - R).
    #[arg(long)]
    pub s0: Option<f64>,
    /// Initial infectious fraction.
    #[arg(long)]
    pub i0: Option<f64>,
    /// Initial removed fraction.
    #[arg(long = "r0fr")]
    pub r0fr: Option<f64>,
    /// Initial population for the fraction system (defaults to N*).
    #[arg(long)]
    pub n0: Option<f64>,
    #[arg(long, default_value_t = 200.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = sirsvp_core::integrator::DEFAULT_RTOL)]
    pub rtol: f64,
    #[arg(long, default_value_t = sirsvp_core::integrator::DEFAULT_ATOL)]
    pub atol: f64,
    #[arg(long, default_value_t = sirsvp_core::integrator::DEFAULT_MAX_STEPS)]
    pub max_steps: usize,
    /// Sample on a uniform grid with this spacing instead of at every step.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Append the Lyapunov function of the predicted attractor as a column.
    #[arg(long)]
    pub lyapunov: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegionArg {
    /// Full simplex when rho >= 1 or the regime is uncertified, Omega otherwise.
    Auto,
    Full,
    Omega,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, default_value_t = sirsvp_core::lyapunov::DEFAULT_RESOLUTION)]
    pub resolution: usize,
    #[arg(long, value_enum, default_value = "auto")]
    pub region: RegionArg,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Swept parameter: b, beta, nu, delta, p, alpha, mu0 or k.
    #[arg(long)]
    pub param: sirsvp_core::SweepParam,
    #[arg(long)]
    pub lo: f64,
    #[arg(long)]
    pub hi: f64,
    #[arg(long, default_value_t = 51)]
    pub points: usize,
    /// Comma-separated subset of equilibria, regime, fate, probe.
    #[arg(long, value_delimiter = ',', default_value = "equilibria,regime,fate")]
    pub tasks: Vec<TaskArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Equilibria,
    Regime,
    Fate,
    Probe,
}
