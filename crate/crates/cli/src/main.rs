//! `cmikit` command-line interface.
//!
//! Every command writes one primary output (`--out`) and a run manifest next
//! to it (`<out>.manifest.json`). Failures print a JSON error object on stderr
//! and exit non-zero.

mod commands;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use output::CliError;

#[derive(Debug, Parser)]
#[command(name = "cmikit", version, about = "Classifier-based MI and CMI estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Master seed; all randomness is derived from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Primary output file.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON configuration overlaid on the command's defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct Units {
    /// Report information values in bits instead of nats.
    #[arg(long)]
    pub bits: bool,
}

impl Units {
    pub fn factor(&self) -> f64 {
        if self.bits {
            std::f64::consts::LOG2_E
        } else {
            1.0
        }
    }

    pub fn name(&self) -> &'static str {
        if self.bits {
            "bits"
        } else {
            "nats"
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    GaussCorr,
    #[value(name = "linear-I")]
    LinearI,
    #[value(name = "linear-II")]
    LinearII,
    Nonlinear,
    PostNonlinear,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: Model,
    /// Coordinate pairs of `gauss-corr`.
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, default_value_t = cmikit::datagen::DEFAULT_SIGMA)]
    pub sigma: f64,
    #[arg(long, default_value_t = cmikit::datagen::NONLINEAR_A_XY)]
    pub a_xy: f64,
    /// Post non-linear model: generate the dependent variant.
    #[arg(long)]
    pub dependent: bool,
    /// Sample size of oracle ground truths.
    #[arg(long, default_value_t = cmikit::datagen::DEFAULT_ORACLE_N)]
    pub oracle_n: usize,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub dz: Option<usize>,
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Ccmi,
    GenClassifier,
    Ksg,
    FMineDiff,
}

#[derive(Debug, Clone, Args)]
pub struct DimArgs {
    #[arg(long)]
    pub dx: Option<usize>,
    #[arg(long)]
    pub dy: Option<usize>,
    #[arg(long)]
    pub dz: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    /// Input CSV; dimensions come from flags or the `<in>.meta.json` sidecar.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub dims: DimArgs,
    /// KSG neighbour counts (repeatable).
    #[arg(long, default_values_t = vec![cmikit::knn::DEFAULT_K])]
    pub k: Vec<usize>,
    #[command(flatten)]
    pub units: Units,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct CitArgs {
    /// Per-dataset CSV (default `<out>.csv`).
    #[arg(long)]
    pub results: Option<PathBuf>,
    #[command(flatten)]
    pub units: Units,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Sample sizes (repeatable).
    #[arg(long = "n", required = true)]
    pub ns: Vec<usize>,
    /// Conditioning dimensions (repeatable).
    #[arg(long = "dz", required = true)]
    pub dzs: Vec<usize>,
    /// Estimator reseeds per grid cell; the dataset of a cell is fixed.
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    /// KSG neighbour count.
    #[arg(long, default_value_t = cmikit::knn::DEFAULT_K)]
    pub k: usize,
    #[command(flatten)]
    pub units: Units,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub dims: DimArgs,
    #[arg(long, default_value_t = cmikit::cit::DEFAULT_BINS)]
    pub bins: usize,
    #[command(flatten)]
    pub units: Units,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset with its ground truth.
    Gen(GenArgs),
    /// Estimate I(X; Y | Z) (or I(X; Y) with no z block) from a CSV file.
    Estimate(EstimateArgs),
    /// Run a conditional independence testing benchmark from a JSON config.
    Cit(CitArgs),
    /// Sweep an estimator over sample sizes and conditioning dimensions.
    Sweep(SweepArgs),
    /// Reliability curve of the MI classifier on a CSV file.
    Calibrate(CalibrateArgs),
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("CMIKIT_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| output::usage(format!("CMIKIT_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(output::usage("CMIKIT_THREADS must be ≥ 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| output::usage(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Gen(a) => commands::gen(&a),
        Command::Estimate(a) => commands::estimate(&a),
        Command::Cit(a) => commands::cit(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Calibrate(a) => commands::calibrate(&a),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let msg = e.render().to_string();
            let err = output::usage(msg.trim_start_matches("error: ").trim_end());
            eprintln!("{}", err.to_json());
            std::process::exit(err.exit_code());
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("{}", e.to_json());
        std::process::exit(e.exit_code());
    }
}
