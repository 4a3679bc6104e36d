use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Lung cancer risk prediction from questionnaire records.
///
/// Results go to standard output as `key=value` lines; progress and
/// diagnostics go to standard error. Settings resolve as flag, then
/// `DEEPLCP_*` environment variable, then the `--run-config` file, then the
/// built-in default.
#[derive(Debug, Parser)]
#[command(name = "deeplcp", version)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Schema file (default: the shipped 31-attribute schema).
    #[arg(long, global = true, env = "DEEPLCP_SCHEMA")]
    pub schema: Option<PathBuf>,
    /// Rule file (default: the shipped rules).
    #[arg(long, global = true, env = "DEEPLCP_RULES")]
    pub rules: Option<PathBuf>,
    /// Grouping plan file (default: consecutive offsets from rule widths).
    #[arg(long, global = true, env = "DEEPLCP_PLAN")]
    pub plan: Option<PathBuf>,
    /// Cleaning config file (default: the shipped cleaning config).
    #[arg(long, global = true, env = "DEEPLCP_CLEAN")]
    pub clean: Option<PathBuf>,
    /// File of `key: value` defaults for any setting flag.
    #[arg(long = "run-config", global = true, env = "DEEPLCP_CONFIG")]
    pub run_config: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct TrainArgs {
    #[arg(long, env = "DEEPLCP_SEED")]
    pub seed: Option<u64>,
    #[arg(long, env = "DEEPLCP_EPOCHS")]
    pub epochs: Option<usize>,
    #[arg(long, env = "DEEPLCP_LR")]
    pub lr: Option<f64>,
    #[arg(long, env = "DEEPLCP_BATCH")]
    pub batch: Option<usize>,
    #[arg(long, value_enum, env = "DEEPLCP_OPTIMIZER")]
    pub optimizer: Option<OptimizerArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptimizerArg {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Knn,
    Tree,
    Forest,
    Ann,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, clean and re-emit a record file.
    Ingest {
        #[arg(long = "in")]
        input: PathBuf,
        /// Where to write the cleaned records; without it only the summary
        /// is printed.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit with status 2 if any row was rejected.
        #[arg(long)]
        strict: bool,
    },
    /// Rule file tools.
    Rules {
        #[command(subcommand)]
        action: RulesAction,
    },
    /// Write one reduced matrix per record plus an index file.
    Transform {
        #[arg(long = "in")]
        input: PathBuf,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        /// Write raw 31x13 matrices instead of reduced ones.
        #[arg(long)]
        raw: bool,
    },
    /// Generate labeled synthetic records.
    Synth {
        /// Synth config file (default: the reference-scale config).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, env = "DEEPLCP_SEED")]
        seed: Option<u64>,
        /// Override the record count.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the CNN on a labeled record file.
    Train {
        #[arg(long, env = "DEEPLCP_DATA")]
        data: PathBuf,
        /// Model file to write.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Print class probabilities for every record in a file.
    Predict {
        #[arg(long, env = "DEEPLCP_MODEL")]
        model: PathBuf,
        /// Record file (labels optional).
        #[arg(long)]
        record: PathBuf,
    },
    /// Evaluate a trained model on a labeled record file.
    Evaluate {
        #[arg(long, env = "DEEPLCP_MODEL")]
        model: PathBuf,
        #[arg(long, env = "DEEPLCP_DATA")]
        data: PathBuf,
        /// Also write ROC points as two columns (fpr tpr).
        #[arg(long)]
        roc: Option<PathBuf>,
    },
    /// Fit and evaluate a classical baseline on row-sum features.
    Baseline {
        #[arg(long, value_enum, env = "DEEPLCP_ALGO")]
        algo: Option<AlgoArg>,
        /// Labeled records; split into train and test unless --test is given.
        #[arg(long, env = "DEEPLCP_DATA")]
        data: PathBuf,
        /// Separate labeled test file.
        #[arg(long)]
        test: Option<PathBuf>,
        /// Neighbours for knn (odd).
        #[arg(long, env = "DEEPLCP_K")]
        k: Option<usize>,
        #[arg(long, env = "DEEPLCP_SEED")]
        seed: Option<u64>,
        /// Training share when splitting --data.
        #[arg(long, default_value_t = 490.0 / 601.0)]
        train_frac: f64,
    },
    /// Synthesize, split, train, evaluate the CNN and all baselines.
    Pipeline {
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Synth config file (default: the reference-scale config).
        #[arg(long)]
        synth_config: Option<PathBuf>,
        /// Skip the four baselines.
        #[arg(long)]
        no_baselines: bool,
        #[command(flatten)]
        train: TrainArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum RulesAction {
    /// Parse and bind a rule file, printing every diagnostic.
    Check,
}
