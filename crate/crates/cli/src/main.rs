//! `hawkesflock` command-line tool.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error,
//! 3 at least one simulated path hit the explosive-regime guard. Failures are
//! reported on stderr as one JSON object `{"error": kind, "message": ...}`.

mod commands;
mod manifest;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
    pub code: u8,
}

impl CliError {
    pub fn runtime(kind: &'static str, message: impl ToString) -> Self {
        Self {
            kind,
            message: message.to_string(),
            code: 1,
        }
    }

    pub fn config(message: impl ToString) -> Self {
        Self {
            kind: "config",
            message: message.to_string(),
            code: 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::runtime("io", e)
    }
}

impl From<hawkesflock::io::IoError> for CliError {
    fn from(e: hawkesflock::io::IoError) -> Self {
        match e {
            hawkesflock::io::IoError::Schema(_) => Self::config(e),
            other => Self::runtime("io", other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "hawkesflock", version, about = "Hawkes flocking model: simulation, calibration, risk and CoVaR")]
struct Cli {
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate event streams for a parameter set.
    Simulate(SimulateArgs),
    /// Simulate-and-refit recovery study printed in table layout.
    Table1(Table1Args),
    /// Turn a pair of raw tick files into an event stream.
    Ingest(IngestArgs),
    /// Maximum-likelihood fit of one or more event files.
    Estimate(EstimateArgs),
    /// Branching-matrix risk measures from fit results.
    Risk(RiskArgs),
    /// Rolling copula CoVaR on a pair of daily close series.
    Covar(CovarArgs),
    /// Per-day ingest, fit and risk over a directory of tick files.
    Pipeline(PipelineArgs),
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// JSON config; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Flat 12-key parameter JSON.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub paths: Option<u64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub burnin: Option<f64>,
    #[arg(long)]
    pub max_events: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "sim_out")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct Table1Args {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Benchmark column 1, 2 or 3.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub column: Option<u8>,
    /// Custom parameter JSON instead of a benchmark column.
    #[arg(long, conflicts_with = "column")]
    pub params: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub paths: Option<u64>,
    /// Target events per path; sets the horizon from the stationary rate.
    #[arg(long)]
    pub events: Option<f64>,
    #[arg(long, conflicts_with = "events")]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    /// Tick CSV (`timestamp_ms,price`) of the first asset.
    #[arg(long)]
    pub first: PathBuf,
    #[arg(long)]
    pub second: PathBuf,
    #[arg(long)]
    pub tick1: f64,
    #[arg(long)]
    pub tick2: f64,
    /// Level-adjustment window in seconds.
    #[arg(long, default_value_t = 600.0)]
    pub window: f64,
    /// Series rescaled by the level adjustment (1 or 2).
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub target: u8,
    #[arg(long, default_value_t = hawkesflock::ingest::DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Event CSV; the sidecar goes next to it with a .json extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    /// Event CSVs with sidecars.
    #[arg(long = "events", required = true, num_args = 1..)]
    pub events: Vec<PathBuf>,
    #[arg(long, default_value = "flocking")]
    pub model: hawkesflock::estimate::Model,
    /// Starting parameters (single start instead of the default grid).
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub floor_events: Option<usize>,
    /// `.json` for one fit, `.jsonl` for one line per input.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RiskArgs {
    /// FitResult JSON or labelled JSON lines.
    #[arg(long)]
    pub fits: PathBuf,
    /// Directory of `<label>.csv` event files for the empirical gap share.
    #[arg(long)]
    pub events_dir: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CovarArgs {
    /// CSV `date,close1,close2`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.05)]
    pub beta: f64,
    #[arg(long, default_value_t = 250)]
    pub window: usize,
    #[arg(long, value_delimiter = ',', default_value = "gaussian,t,gumbel,clayton")]
    pub families: Vec<hawkesflock::covar::Family>,
    #[arg(long, default_value = "empirical")]
    pub marginal: hawkesflock::covar::MarginalKind,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    /// Directory of `<label>_1.csv` / `<label>_2.csv` tick files.
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub tick1: Option<f64>,
    #[arg(long)]
    pub tick2: Option<f64>,
    #[arg(long)]
    pub model: Option<hawkesflock::estimate::Model>,
    /// CoVaR window in days.
    #[arg(long)]
    pub covar_window: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            return fail(CliError::runtime("threads", e));
        }
    }
    let res = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Table1(a) => commands::table1(a),
        Command::Ingest(a) => commands::ingest(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::Risk(a) => commands::risk(a),
        Command::Covar(a) => commands::covar(a),
        Command::Pipeline(a) => commands::pipeline(a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    let msg = serde_json::json!({ "error": e.kind, "message": e.message });
    eprintln!("{msg}");
    ExitCode::from(e.code)
}
