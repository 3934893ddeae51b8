use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use csi_core::Metric;

#[derive(Debug, Parser)]
#[command(name = "csi", version, about = "Learn structured single index models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model and write it to --model-out.
    Train(TrainArgs),
    /// Score a dataset with a saved model (CSV: row,score,pred).
    Predict(PredictArgs),
    /// Evaluate a saved model on a labelled dataset.
    Eval(EvalArgs),
    /// Generate a synthetic single index dataset.
    Synth(SynthArgs),
    /// Run the iterate-convergence experiment and write the distance traces.
    Convergence(ConvergenceArgs),
    /// Grid search over the atom budget and step size on a 50/25/25 split.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// `.csv` files are dense CSV, anything else sparse text
    Auto,
    Csv,
    Sparse,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Dense CSV (response first) or sparse `label idx:val …` text.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Auto)]
    pub format: Format,
    /// Feature dimension for sparse input (default: largest index seen).
    #[arg(long)]
    pub dims: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Atoms {
    Sparse,
    Group,
    Lowrank,
    Graph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LinkArg {
    /// Refit the link with LPAV every iteration.
    Learned,
    Identity,
    Logistic,
}

#[derive(Debug, Clone, Args)]
pub struct StructureArgs {
    #[arg(long, value_enum, default_value_t = Atoms::Sparse)]
    pub atoms: Atoms,
    /// Group file: one group per line, 0-based feature indices.
    #[arg(long)]
    pub groups: Option<PathBuf>,
    /// Parameter matrix shape for low-rank atoms, e.g. `20x30`.
    #[arg(long)]
    pub shape: Option<String>,
    #[arg(long)]
    pub row_laplacian: Option<PathBuf>,
    #[arg(long)]
    pub col_laplacian: Option<PathBuf>,
    /// Ridge added to both Laplacians for graph atoms.
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[arg(long, default_value_t = 0.001)]
    pub lambda: f64,
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    #[arg(long, value_enum, default_value_t = LinkArg::Learned)]
    pub link: LinkArg,
    /// Center and scale features (statistics are stored in the model).
    #[arg(long)]
    pub standardize: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub structure: StructureArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Atom budget.
    #[arg(long)]
    pub s: usize,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    /// Seed for the randomized start of the rank truncations.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub model_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Scores at or above the threshold are labelled +1.
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Repeatable. Default: auc for ±1 labels, mse otherwise.
    #[arg(long, value_parser = parse_metric)]
    pub metric: Vec<Metric>,
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthLinkArg {
    Logistic,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    /// ±1 labels with P(+1) = (1 + g(w⋆ᵀx))/2
    Bernoulli,
    /// y = g(w⋆ᵀx)
    Expected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Csv,
    Sparse,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SynthLinkArg::Logistic)]
    pub link: SynthLinkArg,
    #[arg(long, value_enum, default_value_t = NoiseArg::Bernoulli)]
    pub noise: NoiseArg,
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    pub format: OutFormat,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    /// Comma-separated list of dimensions.
    #[arg(long, value_delimiter = ',', default_values_t = vec![400, 1600, 6400])]
    pub d: Vec<usize>,
    #[arg(long)]
    pub seed: u64,
    /// Step sizes tried per dimension; the lowest final distance is kept.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.25, 0.5, 1.0, 2.0])]
    pub etas: Vec<f64>,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lambda: f64,
    /// Atom budget as a multiple of the true sparsity.
    #[arg(long, default_value_t = 5)]
    pub budget_factor: usize,
    /// Trace CSV (`d,t,distance`).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub structure: StructureArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Budgets to try. Default: available atoms / 4, / 8, …, / 1024.
    #[arg(long, value_delimiter = ',')]
    pub s: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0])]
    pub etas: Vec<f64>,
    /// Train, validation and test fractions.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 0.25, 0.25])]
    pub split: Vec<f64>,
    /// Validation metric. Default: auc for ±1 labels, mse otherwise.
    #[arg(long, value_parser = parse_metric)]
    pub metric: Option<Metric>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse().map_err(|e: csi_core::Error| e.to_string())
}
