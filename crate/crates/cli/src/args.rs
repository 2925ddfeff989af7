use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Train, evaluate and analyse product-unit and sigmoid-unit networks that
/// predict Laeq, loudness, roughness and sharpness of an inverter-fed motor.
#[derive(Debug, Parser)]
#[command(name = "punn", version, about)]
pub struct Cli {
    /// Worker threads for fitness and surface evaluation (default: all
    /// cores). Results do not depend on this value.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Log progress (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic dataset over the experimental design.
    Gen(GenArgs),
    /// Evolve networks and report mean/SD/best test metrics.
    ///
    /// Settings are resolved in order: defaults for the
    /// mode, then the `--config` file, then `--preset`, then explicit flags.
    Train(TrainArgs),
    /// Score a model on a labeled dataset.
    Eval(EvalArgs),
    /// Append model predictions to input rows.
    Predict(PredictArgs),
    /// Influence slopes and response surfaces of a model.
    Analyze(AnalyzeArgs),
    /// Fit linear, ridge, lasso and elastic-net baselines.
    Baseline(BaselineArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasisArg {
    Punn,
    Sunn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Simple,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    /// 3 runs with a population of 100.
    Desk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineKindArg {
    All,
    Linear,
    Ridge,
    Lasso,
    ElasticNet,
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// Random seed.
    #[arg(long, env = "PUNN_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Separate test set. Without it the data is split at random.
    #[arg(long)]
    pub test: Option<PathBuf>,

    /// Training share when splitting.
    #[arg(long, default_value_t = 0.75)]
    pub split: f64,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Output CSV file.
    #[arg(long)]
    pub out: PathBuf,

    #[command(flatten)]
    pub seed: SeedArg,

    /// Label noise SD as a fraction of each output's range.
    #[arg(long, default_value_t = 0.02)]
    pub noise: f64,

    /// Keep only this many design points (seeded sample).
    #[arg(long)]
    pub count: Option<usize>,

    /// Label with this model file instead of the reference model.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training CSV file.
    #[arg(long)]
    pub data: PathBuf,

    #[command(flatten)]
    pub split: SplitArgs,

    #[arg(long, value_enum, default_value_t = BasisArg::Punn)]
    pub basis: BasisArg,

    /// simple: 200 generations; complex: 6000.
    #[arg(long, value_enum, default_value_t = ModeArg::Simple)]
    pub mode: ModeArg,

    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,

    /// key=value file overriding the defaults (see README for keys).
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Independent runs (default 30).
    #[arg(long)]
    pub runs: Option<usize>,

    /// Population size (default 1000).
    #[arg(long, alias = "population")]
    pub pop: Option<usize>,

    /// Generations (default set by --mode).
    #[arg(long, alias = "generations")]
    pub gens: Option<usize>,

    /// Random seed; run r uses seed + r.
    #[arg(long, env = "PUNN_SEED")]
    pub seed: Option<u64>,

    /// Wall-time budget per run, seconds.
    #[arg(long)]
    pub time_budget: Option<f64>,

    /// Directory for the model, history and report.
    #[arg(long, default_value = "punn-train")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model file, or `reference` for the built-in model.
    #[arg(long)]
    pub model: String,

    /// Labeled CSV file.
    #[arg(long)]
    pub data: PathBuf,

    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model file, or `reference` for the built-in model.
    #[arg(long)]
    pub model: String,

    /// CSV with the 40 input columns (output columns optional).
    #[arg(long)]
    pub input: PathBuf,

    /// Output CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Model file, or `reference` for the built-in model.
    #[arg(long)]
    pub model: String,

    /// Dataset for the fixed point. Defaults to the synthetic design for
    /// the reference model.
    #[arg(long)]
    pub data: Option<PathBuf>,

    /// Where unswept inputs are held.
    #[arg(long, value_enum, default_value_t = PolicyArg::Mean)]
    pub fixed: PolicyArg,

    /// Write the influence table here.
    #[arg(long)]
    pub influence: Option<PathBuf>,

    /// Swept pair, e.g. `X3,X5` or `p,V50`.
    #[arg(long)]
    pub surface: Option<String>,

    /// Grid size `AxB`.
    #[arg(long, default_value = "50x50")]
    pub grid: String,

    /// Native range `lo:hi` of the first swept variable.
    #[arg(long)]
    pub range_a: Option<String>,

    /// Native range `lo:hi` of the second swept variable.
    #[arg(long)]
    pub range_b: Option<String>,

    /// Write the surface CSV here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    /// Training CSV file.
    #[arg(long)]
    pub data: PathBuf,

    #[command(flatten)]
    pub split: SplitArgs,

    #[arg(long, value_enum, default_value_t = BaselineKindArg::All)]
    pub kind: BaselineKindArg,

    /// Fixed regularization strength; default is 5-fold cross-validation.
    #[arg(long)]
    pub lambda: Option<f64>,

    /// Elastic-net L1 share.
    #[arg(long, default_value_t = 0.5)]
    pub ratio: f64,

    #[command(flatten)]
    pub seed: SeedArg,

    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
