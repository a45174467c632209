//! Argument definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use tacsum_core::model::{BiasMode, Interpolation, KeyframeRule, PipelineConfig, UserAggregation};

use crate::commands::CliError;

#[derive(Debug, Parser)]
#[command(name = "tacsum", version, about = "Training-free video summarization from frame embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summarize one TACEMB file and print the summary as JSON.
    Summarize(SummarizeArgs),
    /// Run the pipeline over a corpus of annotation/embedding pairs.
    Evaluate(EvaluateArgs),
    /// Score uniformly random summaries over a corpus of annotations.
    Baseline(BaselineArgs),
    /// Show sample indices, cluster count and partitions.
    Inspect(InspectArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

fn kebab<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|_| format!("unknown value `{s}`"))
}

fn parse_rule(s: &str) -> Result<KeyframeRule, String> {
    kebab(s)
}

fn parse_interp(s: &str) -> Result<Interpolation, String> {
    kebab(s)
}

fn parse_bias_mode(s: &str) -> Result<BiasMode, String> {
    kebab(s)
}

fn parse_aggregation(s: &str) -> Result<UserAggregation, String> {
    kebab(s)
}

/// Pipeline settings. Unset flags keep the library defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Samples per second [default: 4]
    #[arg(long)]
    pub rate: Option<f64>,
    /// PCA output dimension [default: 34]
    #[arg(long)]
    pub pca_dim: Option<usize>,
    /// t-SNE output dimension [default: 2]
    #[arg(long)]
    pub tsne_dim: Option<usize>,
    /// t-SNE perplexity [default: 30]
    #[arg(long)]
    pub perplexity: Option<f64>,
    /// t-SNE iterations [default: 1000]
    #[arg(long)]
    pub tsne_iters: Option<usize>,
    /// t-SNE learning rate [default: 200]
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Upper bound on the cluster count [default: 16]
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Sample count at which the cluster count is k_max / 2 [default: 200]
    #[arg(long)]
    pub k_midpoint: Option<f64>,
    /// Sigmoid scale for the cluster count [default: 100]
    #[arg(long)]
    pub k_scale: Option<f64>,
    /// CF-tree branching factor [default: 50]
    #[arg(long)]
    pub birch_branching: Option<usize>,
    /// CF-tree threshold as a fraction of the median pairwise distance [default: 0.5]
    #[arg(long)]
    pub birch_threshold: Option<f64>,
    /// Smoothing window, odd [default: 5]
    #[arg(long)]
    pub window: Option<usize>,
    /// Minimum partition length in samples [default: 4]
    #[arg(long)]
    pub min_len: Option<usize>,
    /// mean, middle, ends or middle-ends [default: middle-ends]
    #[arg(long, value_parser = parse_rule)]
    pub keyframe_rule: Option<KeyframeRule>,
    /// cosine or linear [default: cosine]
    #[arg(long, value_parser = parse_interp)]
    pub interp: Option<Interpolation>,
    /// increase-keyframes or decrease-others [default: increase-keyframes]
    #[arg(long, value_parser = parse_bias_mode)]
    pub bias_mode: Option<BiasMode>,
    /// Bias strength in [0, 1] [default: 0.5]
    #[arg(long)]
    pub bias: Option<f64>,
    /// Summary length as a fraction of the frames [default: 0.15]
    #[arg(long)]
    pub budget: Option<f64>,
    /// How per-user f-scores combine: max or mean [default: max]
    #[arg(long, value_parser = parse_aggregation)]
    pub aggregation: Option<UserAggregation>,
    /// Random seed
    #[arg(long, env = "TACSUM_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Use raw cluster-label runs as partitions
    #[arg(long)]
    pub no_temporal: bool,
}

impl ConfigArgs {
    pub fn to_config(&self) -> Result<PipelineConfig, CliError> {
        let d = PipelineConfig::default();
        let config = PipelineConfig {
            rate: self.rate.unwrap_or(d.rate),
            pca_dim: self.pca_dim.unwrap_or(d.pca_dim),
            tsne_dim: self.tsne_dim.unwrap_or(d.tsne_dim),
            perplexity: self.perplexity.unwrap_or(d.perplexity),
            tsne_iters: self.tsne_iters.unwrap_or(d.tsne_iters),
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            k_max: self.k_max.unwrap_or(d.k_max),
            k_midpoint: self.k_midpoint.unwrap_or(d.k_midpoint),
            k_scale: self.k_scale.unwrap_or(d.k_scale),
            birch_branching: self.birch_branching.unwrap_or(d.birch_branching),
            birch_threshold_factor: self.birch_threshold.unwrap_or(d.birch_threshold_factor),
            window: self.window.unwrap_or(d.window),
            min_len: self.min_len.unwrap_or(d.min_len),
            keyframe_rule: self.keyframe_rule.unwrap_or(d.keyframe_rule),
            interp: self.interp.unwrap_or(d.interp),
            bias_mode: self.bias_mode.unwrap_or(d.bias_mode),
            bias: self.bias.unwrap_or(d.bias),
            seed: self.seed,
            budget: self.budget.unwrap_or(d.budget),
            aggregation: self.aggregation.unwrap_or(d.aggregation),
            temporal: !self.no_temporal,
        };
        Ok(config.validate()?)
    }
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    /// TACEMB embedding file
    pub file: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Write the JSON here instead of stdout
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Also write an SVG of the score curves
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory of <name>.json annotations and <name>.tacemb embeddings
    pub dir: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Videos processed concurrently [default: number of CPUs]
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: Option<u16>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    /// Directory of <name>.json annotations
    pub dir: PathBuf,
    /// Random summaries per video
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    pub runs: u32,
    /// Random seed
    #[arg(long, env = "TACSUM_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Summary length as a fraction of the frames
    #[arg(long, default_value_t = 0.15)]
    pub budget: f64,
    /// How per-user f-scores combine: max or mean
    #[arg(long, value_parser = parse_aggregation, default_value = "max")]
    pub aggregation: UserAggregation,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetaArg {
    pub total_frames: u64,
    pub fps: f64,
}

fn parse_meta(s: &str) -> Result<MetaArg, String> {
    let (t, fps) = s.split_once(',').ok_or("expected T,FPS")?;
    Ok(MetaArg {
        total_frames: t.trim().parse().map_err(|e| format!("frame count: {e}"))?,
        fps: fps.trim().parse().map_err(|e| format!("fps: {e}"))?,
    })
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// TACEMB embedding file
    #[arg(required_unless_present = "meta", conflicts_with = "meta")]
    pub file: Option<PathBuf>,
    /// Frame count and frame rate instead of a file, e.g. 30,29.97
    #[arg(long, value_parser = parse_meta)]
    pub meta: Option<MetaArg>,
    #[command(flatten)]
    pub config: ConfigArgs,
}
