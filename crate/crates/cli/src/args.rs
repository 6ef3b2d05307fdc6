use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};
use golde_core::{Precision, Split};

#[derive(Debug, Parser)]
#[command(name = "golde", version, about = "Knowledge graph embeddings with orthogonal transforms on product manifolds")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Worker threads for training and evaluation (default: available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write checkpoints, dictionaries and a metrics log.
    Train(TrainArgs),
    /// Filtered ranking metrics of a checkpoint on one split.
    Eval(EvalArgs),
    /// Logical-pattern and orthogonality defects of relations in a checkpoint.
    Diagnose(DiagnoseArgs),
    /// Run the embedded property suite.
    Selfcheck(SelfcheckArgs),
    /// Write the synthetic toy graph as a dataset directory.
    MakeToy(MakeToyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// key=value file supplying any of these flags; the command line wins.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Dataset directory with train.txt, valid.txt, test.txt.
    #[arg(long)]
    pub data: PathBuf,

    /// Output directory.
    #[arg(long, default_value = "run")]
    pub out: PathBuf,

    /// Stored embedding dimension k.
    #[arg(long, default_value_t = 32)]
    pub dim: usize,

    /// Coordinates given to the elliptic components (default: dim/2 for a mixed product).
    #[arg(long)]
    pub kstar: Option<usize>,

    /// Number of elliptic components.
    #[arg(long, default_value_t = 1)]
    pub mp: usize,

    /// Number of hyperbolic components.
    #[arg(long, default_value_t = 1)]
    pub mq: usize,

    /// Explicit component list such as `P4,P4,Q5`; overrides dim/kstar/mp/mq.
    #[arg(long)]
    pub components: Option<String>,

    /// Exponent l of the per-component distance.
    #[arg(long, default_value_t = 2)]
    pub norm: u32,

    #[arg(long, default_value_t = 512)]
    pub batch_size: usize,

    /// Adversarial temperature.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,

    /// Margin.
    #[arg(long, default_value_t = 6.0)]
    pub gamma: f64,

    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,

    /// Negatives per positive.
    #[arg(long, default_value_t = 64)]
    pub neg_size: usize,

    #[arg(long, default_value_t = 1000)]
    pub steps: usize,

    /// Validate every N steps (0: only after the last step).
    #[arg(long, default_value_t = 100)]
    pub valid_every: usize,

    /// Validate on an evenly strided subset of at most N triples.
    #[arg(long)]
    pub valid_max: Option<usize>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Parameter storage precision: f64 or f32.
    #[arg(long, default_value_t = Precision::F64)]
    pub precision: Precision,

    /// Redraw negatives that are known training triples.
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    pub filter_negatives: bool,

    /// Keep elliptic weights at 1 (Euclidean components).
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    pub freeze_elliptic: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,

    #[arg(long)]
    pub data: PathBuf,

    /// valid or test.
    #[arg(long, default_value_t = Split::Test)]
    pub split: Split,

    /// Also print metrics per relation.
    #[arg(long)]
    pub per_relation: bool,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,

    /// Directory holding relations.dict (default: the checkpoint's directory).
    #[arg(long)]
    pub dicts: Option<PathBuf>,

    /// One name: symmetry. Two: inversion. Three `r1 r2 r3`: r1 against r2 then r3.
    /// None: symmetry and orthogonality of every relation.
    pub relations: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SelfcheckArgs {
    /// Cases per property.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Only f64 is supported.
    #[arg(long, default_value_t = Precision::F64)]
    pub precision: Precision,
}

#[derive(Debug, Args)]
pub struct MakeToyArgs {
    #[arg(long)]
    pub out: PathBuf,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
