use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use uatest_core::investigations::ErrorKind;
use uatest_core::metrics::Metric;

pub const SEED_ENV: &str = "UATEST_SEED";

/// Discover, test and rank associations between protected attributes and application outputs.
#[derive(Debug, Parser)]
#[command(name = "uatest", version)]
pub struct Cli {
    /// Worker threads; 0 uses every available core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test for associations between protected attributes and an output.
    Testing(InvestigationArgs),
    /// Find output labels associated with a binary protected attribute.
    Discovery {
        #[command(flatten)]
        common: InvestigationArgs,
        /// Labels to investigate, ranked by regression score.
        #[arg(long, default_value_t = uatest_core::investigations::DEFAULT_TOP_K)]
        top_k: usize,
    },
    /// Test for associations between protected attributes and prediction errors.
    ErrorProfile {
        #[command(flatten)]
        common: InvestigationArgs,
        /// Column holding the true values the output predicts.
        #[arg(long)]
        ground_truth: String,
        /// How predictions are compared with the truth [default: absolute for numeric outputs, zero-one otherwise].
        #[arg(long, value_enum)]
        error_kind: Option<ErrorKindArg>,
    },
    /// Re-test a saved investigation conditioned on an explanatory attribute, on a fresh test set.
    Debug(DebugArgs),
    /// Score detection of planted disparities in synthetic populations; writes CSV.
    Bench(BenchArgs),
    /// Compare guided tree search with exhaustive itemset search; writes CSV.
    TreeVsItemsets(TreeVsItemsetsArgs),
}

#[derive(Debug, Args)]
pub struct InvestigationArgs {
    /// Headed CSV file of user records.
    #[arg(long)]
    pub data: PathBuf,
    /// JSON schema mapping column names to kind, role and categories [default: inferred].
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Protected attributes, comma separated [default: schema columns with role protected].
    #[arg(long, value_delimiter = ',')]
    pub protected: Vec<String>,
    /// Output column [default: the schema column with role output].
    #[arg(long)]
    pub output: Option<String>,
    /// Contextual attributes, comma separated [default: schema columns with role contextual].
    #[arg(long, value_delimiter = ',')]
    pub context: Vec<String>,
    /// Explanatory attribute to condition on [default: the schema column with role explanatory, if any].
    #[arg(long)]
    pub explanatory: Option<String>,
    /// Association metric [default: chosen from the attribute kinds].
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    /// Output category counted by DIFF and RATIO [default: the last category].
    #[arg(long)]
    pub target: Option<String>,
    /// Two protected categories compared by DIFF and RATIO, as `a,b` [default: the first two].
    #[arg(long, value_name = "A,B")]
    pub groups: Option<String>,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub stats: StatArgs,
    /// Number of disjoint test sets; each investigation or debug pass uses one.
    #[arg(long, default_value_t = 1)]
    pub budget: usize,
    /// Share of rows used for training.
    #[arg(long, default_value_t = uatest_core::dataset::DEFAULT_TRAIN_FRACTION)]
    pub train_fraction: f64,
    /// Seed for the split and all resampling.
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutputArgs,
    /// Save the trained investigation here for later `debug` passes [default: not saved].
    #[arg(long)]
    pub state: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Smallest subpopulation the search may report.
    #[arg(long, default_value_t = 100)]
    pub min_size: usize,
    /// Deepest split the search may make.
    #[arg(long, default_value_t = 5)]
    pub max_depth: usize,
}

#[derive(Debug, Args)]
pub struct StatArgs {
    /// Confidence level for intervals and significance.
    #[arg(long, default_value_t = 0.95)]
    pub conf: f64,
    /// Permutations per p-value on small subpopulations.
    #[arg(long, default_value_t = 1000)]
    pub n_perm: usize,
    /// Bootstrap resamples per interval on small subpopulations.
    #[arg(long, default_value_t = 1000)]
    pub n_boot: usize,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the report here [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DebugArgs {
    /// State file saved by an earlier investigation.
    #[arg(long)]
    pub state: PathBuf,
    /// Explanatory attribute to condition on.
    #[arg(long)]
    pub explanatory: String,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Synthetic users per run.
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    /// Disjoint planted contexts per run.
    #[arg(long, default_value_t = 10)]
    pub plants: usize,
    /// Expected users per planted context.
    #[arg(long, default_value_t = 2000.0)]
    pub size: f64,
    /// Planted effect: output rate shift of each group, half the planted DIFF.
    #[arg(long, default_value_t = 0.15)]
    pub delta: f64,
    /// Association metric.
    #[arg(long, value_enum, default_value_t = MetricArg::Nmi)]
    pub metric: MetricArg,
    /// Seed of the first run.
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    /// Runs, seeded consecutively from `--seed`.
    #[arg(long, default_value_t = 1)]
    pub runs: u64,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub stats: StatArgs,
    /// Write the CSV here [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TreeVsItemsetsArgs {
    /// CSV file to search [default: a synthetic population with planted hotspots].
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// JSON schema for `--data` [default: inferred].
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Protected attribute [default: the schema column with role protected].
    #[arg(long)]
    pub protected: Option<String>,
    /// Output column [default: the schema column with role output].
    #[arg(long)]
    pub output: Option<String>,
    /// Contextual attributes, comma separated [default: schema columns with role contextual].
    #[arg(long, value_delimiter = ',')]
    pub context: Vec<String>,
    /// Synthetic users when `--data` is absent.
    #[arg(long, default_value_t = 40_000)]
    pub n: usize,
    /// Association metric [default: chosen from the attribute kinds].
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    /// Smallest subpopulation either search may consider.
    #[arg(long, default_value_t = 500)]
    pub min_size: usize,
    /// Deepest context either search may build.
    #[arg(long, default_value_t = 5)]
    pub max_depth: usize,
    /// Seed for the synthetic data and the split.
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    /// Write the CSV here [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Diff,
    Ratio,
    Nmi,
    Corr,
    Reg,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Diff => Metric::Diff,
            MetricArg::Ratio => Metric::Ratio,
            MetricArg::Nmi => Metric::Nmi,
            MetricArg::Corr => Metric::Corr,
            MetricArg::Reg => Metric::Reg,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ErrorKindArg {
    Absolute,
    ZeroOne,
}

impl From<ErrorKindArg> for ErrorKind {
    fn from(k: ErrorKindArg) -> Self {
        match k {
            ErrorKindArg::Absolute => ErrorKind::Absolute,
            ErrorKindArg::ZeroOne => ErrorKind::ZeroOne,
        }
    }
}
