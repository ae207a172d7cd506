use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Motif difference field encoding, FCN training and Grad-CAM motif analysis.
#[derive(Debug, Parser)]
#[command(name = "mdf", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encode every series of a UCR file as an MDF image.
    Encode(EncodeArgs),
    /// Train an FCN on MDF images of a UCR training file.
    Train(TrainArgs),
    /// Report the error rate of a trained model on a labeled file.
    Eval(EvalArgs),
    /// Grad-CAM heat maps and ordinal-pattern significance for each series.
    Explain(ExplainArgs),
    /// Finite-difference check of every layer's backward pass.
    Gradcheck(GradcheckArgs),
    /// Write a synthetic two-event dataset in UCR format.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Motif length.
    #[arg(long)]
    pub n: usize,
    /// Output directory; defaults to `$MDF_OUT_DIR/encode`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write one PGM heat map per series and channel.
    #[arg(long)]
    pub channel_images: bool,
    /// Min-max normalize with the file's own bounds before encoding.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: PathBuf,
    /// JSON training configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Filter counts `f1,f2,f3`.
    #[arg(long, value_parser = parse_triple)]
    pub filters: Option<[usize; 3]>,
    /// Fixed strides `u1,u2,u3`.
    #[arg(long, value_parser = parse_triple, conflicts_with = "cv")]
    pub strides: Option<[usize; 3]>,
    /// Pick strides by 4-fold cross-validation over the standard candidates.
    #[arg(long)]
    pub cv: bool,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Epochs per cross-validation fold.
    #[arg(long)]
    pub cv_epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `f32` or `f64`.
    #[arg(long)]
    pub precision: Option<String>,
    /// Output directory; defaults to `$MDF_OUT_DIR/train`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Metrics file; defaults to `metrics.json` in the model directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    /// Target class, 1-based in the order of the sorted training labels.
    #[arg(long)]
    pub class_index: usize,
    /// Output directory; defaults to `$MDF_OUT_DIR/explain`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Explain only this series (1-based row).
    #[arg(long)]
    pub series: Option<usize>,
    /// Differentiated score: `logit` or `probability`.
    #[arg(long, default_value = "logit")]
    pub score: String,
    /// Relative tolerance under which motif values count as tied.
    #[arg(long, default_value_t = 0.0)]
    pub tie_tolerance: f64,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of seeds, each checking every layer.
    #[arg(long, default_value_t = 20)]
    pub count: u64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// 2 or 4.
    #[arg(long)]
    pub classes: usize,
    /// Series per class.
    #[arg(long)]
    pub count: usize,
    #[arg(long)]
    pub length: usize,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long)]
    pub seed: u64,
    /// Output file; defaults to `$MDF_OUT_DIR/synth.tsv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_triple(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| format!("{t:?} is not a positive integer")))
        .collect::<Result<_, _>>()?;
    <[usize; 3]>::try_from(parts).map_err(|_| format!("expected three comma-separated values, got {s:?}"))
}
