use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "nniqs", version, about = "Schwinger-model phase diagrams and their neural up-scaling")]
pub struct Cli {
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true, env = "NNIQS_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Simulate one phase diagram and write it as PHD1.
    Simulate(SimulateArgs),
    /// Tabulate the analytic continuum condensate along T at mu = 0.
    Theory(TheoryArgs),
    /// Simulate a dataset and write its manifest.
    Dataset(DatasetArgs),
    /// Train the network on a dataset manifest.
    Train(TrainArgs),
    /// Up-scale a diagram with a trained network.
    Predict(PredictArgs),
    /// Up-scale a diagram with a classical interpolator.
    Baseline(BaselineArgs),
    /// Score a prediction against ground truth, or benchmark a checkpoint.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct WindowArgs {
    #[arg(long = "t-min", default_value_t = 0.1, env = "NNIQS_T_MIN")]
    pub t_min: f64,
    #[arg(long = "t-max", default_value_t = 2.5, env = "NNIQS_T_MAX")]
    pub t_max: f64,
    #[arg(long = "mu-max", default_value_t = 1.4, env = "NNIQS_MU_MAX")]
    pub mu_max: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Number of lattice sites.
    #[arg(long, env = "NNIQS_N")]
    pub n: usize,
    #[arg(long = "w-over-g", env = "NNIQS_W_OVER_G")]
    pub w_over_g: f64,
    /// Points per axis.
    #[arg(long, default_value_t = 48, env = "NNIQS_GRID")]
    pub grid: usize,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long, env = "NNIQS_OUT")]
    pub out: PathBuf,
    /// Output file name inside `--out`.
    #[arg(long, default_value = "diagram.phd")]
    pub name: String,
}

#[derive(Debug, Args, Serialize)]
pub struct TheoryArgs {
    #[arg(long, default_value_t = 48, env = "NNIQS_GRID")]
    pub grid: usize,
    #[arg(long = "t-min", default_value_t = 0.1, env = "NNIQS_T_MIN")]
    pub t_min: f64,
    #[arg(long = "t-max", default_value_t = 2.5, env = "NNIQS_T_MAX")]
    pub t_max: f64,
    #[arg(long, env = "NNIQS_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitArg {
    /// Seeded train/validation split of every diagram.
    Random,
    /// Train and validate on w/g in [0.5, 1.3]; test on the rest.
    Unseenw,
    /// All diagrams are test diagrams.
    Test,
}

#[derive(Debug, Args, Serialize)]
pub struct DatasetArgs {
    #[arg(long = "n-values", value_delimiter = ',', default_value = "6,8,10", env = "NNIQS_N_VALUES")]
    pub n_values: Vec<usize>,
    /// Explicit w/g values; overrides `--w-count`.
    #[arg(long = "w-values", value_delimiter = ',', env = "NNIQS_W_VALUES")]
    pub w_values: Option<Vec<f64>>,
    /// Evenly spaced w/g values across [0.3, 1.5].
    #[arg(long = "w-count", default_value_t = 25, env = "NNIQS_W_COUNT")]
    pub w_count: usize,
    /// Ground-truth points per axis.
    #[arg(long, default_value_t = 196, env = "NNIQS_GRID")]
    pub grid: usize,
    #[arg(long = "input-side", default_value_t = 48, env = "NNIQS_INPUT_SIDE")]
    pub input_side: usize,
    #[arg(long = "ratio-min", default_value_t = 1, env = "NNIQS_RATIO_MIN")]
    pub ratio_min: usize,
    #[arg(long = "ratio-max", default_value_t = 4, env = "NNIQS_RATIO_MAX")]
    pub ratio_max: usize,
    #[arg(long = "train-fraction", default_value_t = 0.9, env = "NNIQS_TRAIN_FRACTION")]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 0, env = "NNIQS_SEED")]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SplitArg::Random, env = "NNIQS_SPLIT")]
    pub split: SplitArg,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long, env = "NNIQS_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long, env = "NNIQS_MANIFEST")]
    pub manifest: PathBuf,
    #[arg(long, env = "NNIQS_OUT")]
    pub out: PathBuf,
    /// Resume from a checkpoint instead of a fresh initialization.
    #[arg(long, env = "NNIQS_INIT")]
    pub init: Option<PathBuf>,
    #[arg(long, env = "NNIQS_EPOCHS")]
    pub epochs: Option<usize>,
    #[arg(long = "lr", env = "NNIQS_LR")]
    pub learning_rate: Option<f64>,
    #[arg(long, value_delimiter = ',', env = "NNIQS_MILESTONES")]
    pub milestones: Option<Vec<usize>>,
    #[arg(long, env = "NNIQS_DECAY")]
    pub decay: Option<f64>,
    #[arg(long = "batch-size", env = "NNIQS_BATCH_SIZE")]
    pub batch_size: Option<usize>,
    /// Master seed; defaults to the dataset seed.
    #[arg(long, env = "NNIQS_SEED")]
    pub seed: Option<u64>,
    #[arg(long = "ratio-max", env = "NNIQS_RATIO_MAX")]
    pub ratio_max: Option<usize>,
    #[arg(long = "pairs-per-diagram", env = "NNIQS_PAIRS_PER_DIAGRAM")]
    pub pairs_per_diagram: Option<usize>,
    #[arg(long = "targets-per-pair", env = "NNIQS_TARGETS_PER_PAIR")]
    pub targets_per_pair: Option<usize>,
    #[arg(long = "latent-dim", env = "NNIQS_LATENT_DIM")]
    pub latent_dim: Option<usize>,
    #[arg(long = "res-blocks", env = "NNIQS_RES_BLOCKS")]
    pub res_blocks: Option<usize>,
    #[arg(long = "hidden-width", env = "NNIQS_HIDDEN_WIDTH")]
    pub hidden_width: Option<usize>,
    #[arg(long = "hidden-layers", env = "NNIQS_HIDDEN_LAYERS")]
    pub hidden_layers: Option<usize>,
    /// Suppress per-epoch progress lines.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct TargetArgs {
    /// Target points per axis.
    #[arg(long, env = "NNIQS_GRID", conflicts_with = "ratio")]
    pub grid: Option<usize>,
    /// Target points per axis as a multiple of the input's.
    #[arg(long, env = "NNIQS_RATIO")]
    pub ratio: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    #[arg(long, env = "NNIQS_CHECKPOINT")]
    pub checkpoint: PathBuf,
    #[arg(long, env = "NNIQS_INPUT")]
    pub input: PathBuf,
    #[command(flatten)]
    pub target: TargetArgs,
    #[arg(long, env = "NNIQS_OUT")]
    pub out: PathBuf,
    #[arg(long, default_value = "prediction.phd")]
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Bilinear,
    Axiscubic,
    Bicubic,
    Nniqs,
}

#[derive(Debug, Args, Serialize)]
pub struct BaselineArgs {
    #[arg(long, value_enum, env = "NNIQS_METHOD")]
    pub method: MethodArg,
    #[arg(long, env = "NNIQS_INPUT")]
    pub input: PathBuf,
    /// Required with `--method nniqs`.
    #[arg(long, env = "NNIQS_CHECKPOINT")]
    pub checkpoint: Option<PathBuf>,
    #[command(flatten)]
    pub target: TargetArgs,
    #[arg(long, env = "NNIQS_OUT")]
    pub out: PathBuf,
    #[arg(long, default_value = "baseline.phd")]
    pub name: String,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioArg {
    Basic,
    Beyond,
    Unseenw,
    Largen,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// Predicted diagram (PHD1); compared against `--truth`.
    #[arg(long, env = "NNIQS_PRED", requires = "truth", conflicts_with_all = ["checkpoint", "manifest"])]
    pub pred: Option<PathBuf>,
    #[arg(long, env = "NNIQS_TRUTH")]
    pub truth: Option<PathBuf>,
    /// Checkpoint to benchmark on the manifest's held-out diagrams.
    #[arg(long, env = "NNIQS_CHECKPOINT", requires = "manifest")]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, env = "NNIQS_MANIFEST")]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ScenarioArg::Basic, env = "NNIQS_SCENARIO")]
    pub scenario: ScenarioArg,
    /// Up-scaling ratios; defaults to the scenario's preset.
    #[arg(long, value_delimiter = ',', env = "NNIQS_RATIO")]
    pub ratio: Option<Vec<usize>>,
    #[arg(long = "pairs-per-ratio", default_value_t = 1, env = "NNIQS_PAIRS_PER_RATIO")]
    pub pairs_per_ratio: usize,
    #[arg(long, default_value_t = 0, env = "NNIQS_SEED")]
    pub seed: u64,
    #[arg(long, env = "NNIQS_OUT")]
    pub out: PathBuf,
}
