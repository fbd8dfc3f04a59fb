//! `cogpower`: optimize, sweep and simulate multiple-level power policies.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cogpower_core::allocation::{DualMethod, DualOptions};
use cogpower_core::montecarlo::{SimMode, DEFAULT_SAMPLE_CAP};
use cogpower_core::optimizer::{LloydOptions, Strategy};

#[derive(Parser)]
#[command(name = "cogpower", version, about = "Multiple-level transmit-power policies for a cognitive-radio secondary user")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the best sensing time and power policy of each strategy.
    Optimize(OptimizeArgs),
    /// Tabulate solved policies over a range of one scenario parameter.
    Sweep(SweepArgs),
    /// Monte Carlo check of a policy written by `optimize`.
    Simulate(SimulateArgs),
}

#[derive(Args)]
pub struct ProblemArgs {
    /// Scenario config (flat TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Number of power levels; overrides `m` from the config.
    #[arg(long)]
    pub m: Option<usize>,
    /// Sensing grid: a point count (>= 2) for a uniform grid on [0, T], or a comma list of durations in seconds.
    #[arg(long, default_value = "51")]
    pub tau_grid: String,
    /// Skip the integer search around the best grid point.
    #[arg(long)]
    pub no_refine: bool,
    /// Strategy to solve; repeat for several.
    #[arg(long = "strategy", value_parser = parse_strategy)]
    pub strategies: Vec<Strategy>,
    /// Detection probability the osa and binary baselines are designed for.
    #[arg(long, default_value_t = 0.9)]
    pub target_pd: f64,
    #[command(flatten)]
    pub tolerances: ToleranceArgs,
}

#[derive(Args)]
pub struct ToleranceArgs {
    /// Relative stopping tolerance of the threshold/power alternation [default: 1e-8].
    #[arg(long)]
    pub lloyd_tol: Option<f64>,
    /// Iteration cap of the alternation [default: 200].
    #[arg(long)]
    pub lloyd_max_iter: Option<usize>,
    /// Number of initial partitions tried, 1 to 3 [default: 3].
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub starts: Option<u8>,
    /// Relative constraint tolerance of the multiplier search [default: 1e-7].
    #[arg(long)]
    pub dual_tol: Option<f64>,
    /// Iteration cap of the multiplier search [default: 100000].
    #[arg(long)]
    pub dual_max_iter: Option<usize>,
    #[arg(long, value_enum, default_value_t = DualArg::Bracketing)]
    pub dual_method: DualArg,
    /// Initial step of the subgradient method.
    #[arg(long, default_value_t = 1.0)]
    pub dual_step0: f64,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum DualArg {
    Bracketing,
    Subgradient,
}

impl ToleranceArgs {
    pub fn options(&self) -> LloydOptions {
        let d = LloydOptions::default();
        LloydOptions {
            tolerance: self.lloyd_tol.unwrap_or(d.tolerance),
            max_iter: self.lloyd_max_iter.unwrap_or(d.max_iter),
            starts: self.starts.map_or(d.starts, usize::from),
            dual: DualOptions {
                method: match self.dual_method {
                    DualArg::Bracketing => DualMethod::Bracketing,
                    DualArg::Subgradient => DualMethod::Subgradient { step0: self.dual_step0 },
                },
                tolerance: self.dual_tol.unwrap_or(d.dual.tolerance),
                max_iter: self.dual_max_iter.unwrap_or(d.dual.max_iter),
            },
        }
    }
}

#[derive(Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Output JSON path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
pub enum Axis {
    #[value(name = "p_avg")]
    PAvg,
    M,
    Tau,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::PAvg => "p_avg",
            Axis::M => "m",
            Axis::Tau => "tau",
        }
    }
}

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_enum)]
    pub axis: Axis,
    /// Comma-separated axis values (linear units; seconds for tau).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub values: Vec<String>,
    /// Output CSV path; stdout when omitted. The manifest goes next to it as `<out>.manifest.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write each policy's power-versus-energy profile as CSV.
    #[arg(long)]
    pub profile_out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// JSON document written by `optimize`.
    #[arg(long)]
    pub policy: PathBuf,
    /// Which report of the document to simulate; the first when omitted.
    #[arg(long, value_parser = parse_strategy)]
    pub strategy: Option<Strategy>,
    #[arg(long, default_value_t = 100_000)]
    pub frames: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::DirectEnergy)]
    pub mode: ModeArg,
    /// Largest sample count allowed in sample-level mode.
    #[arg(long, default_value_t = DEFAULT_SAMPLE_CAP)]
    pub sample_cap: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ModeArg {
    DirectEnergy,
    SampleLevel,
}

impl From<ModeArg> for SimMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::DirectEnergy => SimMode::DirectEnergy,
            ModeArg::SampleLevel => SimMode::SampleLevel,
        }
    }
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Optimize(a) => commands::optimize(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Simulate(a) => commands::simulate(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
