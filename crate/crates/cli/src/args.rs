use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "histlearn",
    version,
    about = "Learn cardinality-estimation histograms from query feedback",
    args_override_self = true
)]
pub struct Cli {
    /// File of `key=value` lines supplying default flag values; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset or ingest records into a dataset file.
    GenData(GenData),
    /// Generate range queries over a dataset's domain.
    GenQueries(GenQueries),
    /// Attach exact cardinalities to queries.
    Label(Label),
    /// Fit a histogram to query feedback records.
    Train(Train),
    /// Estimate cardinalities of queries from a histogram or sketch.
    Estimate(Estimate),
    /// Report the average relative error of a histogram or sketch on labeled queries.
    Evaluate(Evaluate),
    /// Replay a query stream through online EquiHist, with optional database updates.
    OnlineSim(OnlineSim),
    /// Run a seeded experiment sweep and write results plus a plot script.
    Sweep(Sweep),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    Type1,
    Type2,
    GaussNd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundaryArg {
    Clamp,
    Redraw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Uniform,
    DataDependent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Equihist,
    Sphist,
    OnlineEquihist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Absolute,
    Signed,
}

#[derive(Debug, Args)]
pub struct GenData {
    #[arg(long, value_enum, default_value = "type1")]
    pub preset: PresetArg,
    /// Range per dimension, e.g. `1024` or `32,32`.
    #[arg(long, value_delimiter = ',', default_value = "1024")]
    pub r: Vec<usize>,
    /// Repeat a single range over this many dimensions.
    #[arg(long)]
    pub dims: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub records: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "clamp")]
    pub out_of_domain: BoundaryArg,
    /// Ingest a plain CSV of records (one per row, `d` integer columns) instead of sampling.
    #[arg(long, value_name = "CSV")]
    pub from_records: Option<PathBuf>,
    /// Record values in `--from-records` start at 0 instead of 1.
    #[arg(long)]
    pub zero_based: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenQueries {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "uniform")]
    pub model: ModelArg,
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 0.2)]
    pub max_volume_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Label {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Train {
    #[arg(long, value_enum)]
    pub method: MethodArg,
    #[arg(long)]
    pub buckets: usize,
    #[arg(long)]
    pub qfrs: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Wavelet sketch output (sphist only).
    #[arg(long)]
    pub sketch_out: Option<PathBuf>,
    /// Buckets per dimension for equi-width methods, overriding the even split of `--buckets`.
    #[arg(long, value_delimiter = ',')]
    pub per_dim: Option<Vec<usize>>,
    /// OMP support size (sphist); defaults to `--buckets`.
    #[arg(long)]
    pub omp_budget: Option<usize>,
    #[arg(long, value_enum, default_value = "absolute")]
    pub selection_rule: RuleArg,
    #[arg(long)]
    pub normalize_columns: bool,
    /// Ridge added to the normalized normal equations; online default is 1e-8·trace/b.
    #[arg(long)]
    pub ridge: Option<f64>,
    /// Per-observation decay of earlier records (online-equihist).
    #[arg(long, default_value_t = 1.0)]
    pub decay: f64,
}

#[derive(Debug, Args)]
#[group(id = "model", required = true, multiple = false, args = ["hist", "sketch"])]
pub struct ModelSource {
    #[arg(long)]
    pub hist: Option<PathBuf>,
    #[arg(long)]
    pub sketch: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Estimate {
    #[command(flatten)]
    pub model: ModelSource,
    #[arg(long)]
    pub queries: PathBuf,
    /// Output in QFR format; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Evaluate {
    #[command(flatten)]
    pub model: ModelSource,
    #[arg(long)]
    pub qfrs: PathBuf,
}

#[derive(Debug, Args)]
pub struct OnlineSim {
    #[arg(long)]
    pub data: PathBuf,
    /// Queries fed one per step.
    #[arg(long)]
    pub stream: PathBuf,
    /// Queries on which error is measured.
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub buckets: usize,
    #[arg(long, value_delimiter = ',')]
    pub per_dim: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1.0)]
    pub decay: f64,
    #[arg(long)]
    pub ridge: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub eval_every: usize,
    /// Steps after which the database is perturbed (repeatable or comma separated).
    #[arg(long, value_delimiter = ',')]
    pub perturb_at: Vec<usize>,
    /// Fraction of records moved by each perturbation.
    #[arg(long, default_value_t = 0.3)]
    pub perturb_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trajectory CSV `step,avg_rel_error`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Sweep {
    /// Experiment configuration (`key=value` lines).
    #[arg(long)]
    pub experiment: PathBuf,
    /// Offset added to every seed in the experiment's seed list.
    #[arg(long)]
    pub seed: u64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Record wall time per row (makes the CSV time dependent).
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Gnuplot script; defaults to the results path with a `.gp` extension.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}
