//! Command-line front end: geometry statistics, coverage heatmaps, training,
//! evaluation and a curation walkthrough.

use std::env;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use cropcurate::{PairGeometry, RegimeKind};

mod commands;

pub use commands::{
    cmd_curate_demo, cmd_eval, cmd_heatmap, cmd_stats, cmd_train, demo_row, load_dataset_arg, TrainSummary,
    DEMO_HEADER,
};

/// Overrides the output directory of every command that writes files.
pub const OUT_DIR_ENV: &str = "CROPCURATE_OUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] cropcurate::Error),
}

impl CliError {
    /// 0 success, 1 I/O or data error, 2 usage error, 3 numeric failure.
    pub fn exit_code(&self) -> u8 {
        use cropcurate::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(E::InvalidParam { .. } | E::Config(_)) => 2,
            CliError::Core(E::NonFiniteLoss { .. } | E::Numeric(_)) => 3,
            CliError::Core(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "cropcurate", version, about = "Crop-pair statistics and curated contrastive training")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo frequencies of pair configurations and mean patch area.
    Stats(StatsArgs),
    /// Normalised per-pixel crop coverage.
    Heatmap(HeatmapArgs),
    /// Train an encoder, optionally with batch curation.
    Train(TrainArgs),
    /// K-NN and linear-probe accuracy of a checkpoint.
    Eval(EvalArgs),
    /// Curate a few random batches and print the distances before and after.
    CurateDemo(CurateDemoArgs),
}

/// Parses `lo,hi`.
pub fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or_else(|| format!("expected `lo,hi`, got `{s}`"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("bad lower bound `{lo}`: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("bad upper bound `{hi}`: {e}"))?;
    Ok((lo, hi))
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 32)]
    pub image_size: u32,
    #[arg(long, default_value = "default")]
    pub regime: RegimeKind,
    #[arg(long, value_parser = parse_range, default_value = "0.08,1")]
    pub scale: (f64, f64),
    #[arg(long, value_parser = parse_range, default_value = "0.75,1.3333333333333333")]
    pub ratio: (f64, f64),
    #[arg(long, default_value = "continuous-box")]
    pub geometry: PairGeometry,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// ConfigStats JSON destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    /// Number of crops.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 32)]
    pub image_size: u32,
    #[arg(long, value_parser = parse_range, default_value = "0.08,1")]
    pub scale: (f64, f64),
    #[arg(long, value_parser = parse_range, default_value = "0.75,1.3333333333333333")]
    pub ratio: (f64, f64),
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_pgm: Option<PathBuf>,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Enable curation (default warm-up: 20% of the epochs).
    #[arg(long)]
    pub curate: bool,
    /// Warm-up epochs before curation starts; implies --curate.
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// CIFAR-10 binary directory, or a JSON file holding a dataset spec or
    /// a full run config.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub k: usize,
    #[arg(long, default_value_t = 100)]
    pub probe_epochs: usize,
    /// Side length images are resized to before encoding; defaults to the
    /// crop size recorded next to the checkpoint.
    #[arg(long)]
    pub input_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub model_id: Option<String>,
    /// Summary CSV; defaults to `summary.csv` in the output directory.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurateDemoArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    /// Encoder to curate with; a fresh one from the config otherwise.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Flag, then environment, then `fallback`.
pub fn resolve_out_dir(flag: Option<&Path>, fallback: &Path) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| fallback.to_path_buf())
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Stats(a) => cmd_stats(&a),
        Command::Heatmap(a) => cmd_heatmap(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::CurateDemo(a) => cmd_curate_demo(&a),
    }
}
