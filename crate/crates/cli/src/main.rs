//! `mgpt`: reproducible microgrid penetration-testing runs.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "mgpt", version, about = "False-data-injection red-teaming of a microgrid battery controller")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic load/solar scenario.
    Synth(SynthArgs),
    /// Run the controller and plant without an attacker.
    Simulate(SimulateArgs),
    /// Train an actor-critic attacker.
    Train(TrainArgs),
    /// Evaluate a trained attacker against several initial charges.
    Attack(AttackArgs),
    /// Grid-search reference attack.
    Oracle(OracleArgs),
    /// Re-run a command from its manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub days: u64,
    /// Output directory for load.csv and solar.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Directory holding load.csv and solar.csv; the bundled synthetic
    /// scenario when omitted.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Off-peak buy price, cents/kWh.
    #[arg(long, default_value_t = 6.5)]
    pub off_peak: f64,
    #[arg(long, default_value_t = 9.4)]
    pub mid_peak: f64,
    #[arg(long, default_value_t = 13.4)]
    pub on_peak: f64,
    /// Flat sell price, cents/kWh.
    #[arg(long, default_value_t = 5.0)]
    pub sell: f64,
}

#[derive(Debug, Clone, Args)]
pub struct PlantArgs {
    #[arg(long, default_value_t = 20.0)]
    pub capacity_kwh: f64,
    /// Controller horizon in hours.
    #[arg(long = "T", default_value_t = 24)]
    pub horizon: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub plant: PlantArgs,
    #[arg(long, default_value_t = 80.0)]
    pub init_soc: f64,
    /// Force every battery command OFF (baseline).
    #[arg(long)]
    pub force_off: bool,
    #[arg(long, default_value = "trace.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Full,
    Pct5,
    Abs,
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Full)]
    pub attack_mode: ModeArg,
    /// Lower offset bound for `abs` mode, percent.
    #[arg(long, allow_hyphen_values = true)]
    pub a_min: Option<f64>,
    /// Upper offset bound for `abs` mode, percent.
    #[arg(long, allow_hyphen_values = true)]
    pub a_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptimizerArg {
    Adam,
    Sgd,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub plant: PlantArgs,
    #[command(flatten)]
    pub bounds: BoundsArgs,
    #[arg(long, default_value_t = 1000)]
    pub episodes: usize,
    /// Hourly steps per episode.
    #[arg(long, default_value_t = 48)]
    pub steps: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.99)]
    pub gamma: f64,
    #[arg(long, default_value_t = 3e-4)]
    pub actor_lr: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub critic_lr: f64,
    #[arg(long, value_enum, default_value_t = OptimizerArg::Adam)]
    pub optimizer: OptimizerArg,
    /// Fixed initial SoC for every episode; uniform over the band when omitted.
    #[arg(long)]
    pub init_soc: Option<f64>,
    #[arg(long, default_value = "agent.txt")]
    pub out: PathBuf,
    #[arg(long, default_value = "curve.csv")]
    pub curve: PathBuf,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[arg(long)]
    pub agent: PathBuf,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub plant: PlantArgs,
    /// Comma-separated initial charges, percent.
    #[arg(long, value_delimiter = ',', default_value = "75,80,85,90,95,100")]
    pub init_soc: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value = "report.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleMode {
    /// Best single-step offset each hour.
    Greedy,
    /// Exhaustive search over offset sequences.
    Exact,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub plant: PlantArgs,
    #[command(flatten)]
    pub bounds: BoundsArgs,
    #[arg(long, value_enum, default_value_t = OracleMode::Greedy)]
    pub mode: OracleMode,
    /// Offset grid spacing, percent.
    #[arg(long, default_value_t = 0.5)]
    pub grid: f64,
    #[arg(long, default_value_t = 8)]
    pub hours: usize,
    #[arg(long, default_value_t = 80.0)]
    pub init_soc: f64,
    #[arg(long, default_value = "oracle.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    pub manifest: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
