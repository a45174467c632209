//! Subcommand implementations. Each writes its primary output to the given
//! writer (or the `--output` file) and reports failures as [`CliError`].

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use log::warn;
use rayon::prelude::*;
use serde::Serialize;
use tacsum_core::clusterer::target_cluster_count;
use tacsum_core::evaluator::{self, knapsack_select, AnnotatedVideo};
use tacsum_core::model::{EmbeddingSet, Partition, PipelineConfig, VideoMeta};
use tacsum_core::pipeline::partition_frame_segments;
use tacsum_core::{evaluate_pipeline, sampler, summarize};
use thiserror::Error;

use crate::cli::{BaselineArgs, Cli, Command, EvaluateArgs, InspectArgs, OutputFormat, SummarizeArgs};
use crate::format::{self, FormatError};
use crate::plot;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl From<tacsum_core::Error> for CliError {
    fn from(e: tacsum_core::Error) -> Self {
        match e {
            tacsum_core::Error::Config { .. } => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn with_path<T, E: Into<CliError>>(path: &Path, r: Result<T, E>) -> Result<T, CliError> {
    r.map_err(|e| match e.into() {
        CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
        usage => usage,
    })
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Summarize(args) => cmd_summarize(&args, out),
        Command::Evaluate(args) => cmd_evaluate(&args, out),
        Command::Baseline(args) => cmd_baseline(&args, out),
        Command::Inspect(args) => cmd_inspect(&args, out),
    }
}

fn emit(output: Option<&Path>, out: &mut dyn Write, bytes: &[u8]) -> Result<(), CliError> {
    match output {
        Some(path) => with_path(path, fs::write(path, bytes)),
        None => Ok(out.write_all(bytes)?),
    }
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec(value).expect("serializable");
    bytes.push(b'\n');
    bytes
}

#[derive(Debug, Serialize)]
pub struct SummaryJson {
    pub keyframes: Vec<usize>,
    pub sample_scores: Vec<f64>,
    pub frame_scores: Vec<f64>,
    pub partitions: Vec<Partition>,
    /// Indices into `partitions` picked by the knapsack at the budget.
    pub selected_segments: Vec<usize>,
}

fn check_rate(config_rate: Option<f64>, set: &EmbeddingSet) -> Result<(), CliError> {
    if let Some(rate) = config_rate {
        if (rate - set.map.rate).abs() > 1e-6 * rate.max(1.0) {
            return Err(CliError::Data(format!(
                "file was sampled at rate {}, not {rate}",
                set.map.rate
            )));
        }
    }
    Ok(())
}

pub fn summarize_set(path: &Path, set: &EmbeddingSet, config: &PipelineConfig) -> Result<SummaryJson, CliError> {
    let output = with_path(path, summarize(set, config))?;
    let segments = partition_frame_segments(set, &output.partitions)?;
    let budget = (config.budget * set.meta.total_frames as f64).floor() as usize;
    let selected_segments = knapsack_select(&segments, &output.frame_scores, budget)?;
    Ok(SummaryJson {
        keyframes: output.keyframes,
        sample_scores: output.sample_scores,
        frame_scores: output.frame_scores,
        partitions: output.partitions.partitions,
        selected_segments,
    })
}

pub fn cmd_summarize(args: &SummarizeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = args.config.to_config()?;
    let set = with_path(&args.file, format::load_tacemb(&args.file))?;
    check_rate(args.config.rate, &set)?;
    let json = summarize_set(&args.file, &set, &config)?;
    if let Some(svg_path) = &args.plot {
        let flat = tacsum_core::scorer::flat_scores(&tacsum_core::PartitionSet {
            partitions: json.partitions.clone(),
        });
        let svg = plot::score_plot(&flat, &json.sample_scores, &json.keyframes, &json.partitions);
        with_path(svg_path, fs::write(svg_path, svg))?;
    }
    emit(args.output.as_deref(), out, &to_json(&json))
}

/// Stem, annotation path and embedding path.
type Pair = (String, PathBuf, PathBuf);

/// `<stem>.json` and `<stem>.tacemb` pairs in `dir`, plus stems missing one half.
fn discover(dir: &Path) -> Result<(Vec<Pair>, Vec<String>), CliError> {
    let mut found: BTreeMap<String, (Option<PathBuf>, Option<PathBuf>)> = BTreeMap::new();
    for entry in with_path(dir, fs::read_dir(dir))? {
        let path = entry?.path();
        let (Some(stem), Some(ext)) = (path.file_stem(), path.extension()) else {
            continue;
        };
        let slot = found.entry(stem.to_string_lossy().into_owned()).or_default();
        match ext.to_str() {
            Some("json") => slot.0 = Some(path),
            Some("tacemb") => slot.1 = Some(path),
            _ => {}
        }
    }
    let mut pairs = Vec::new();
    let mut missing = Vec::new();
    for (stem, slot) in found {
        match slot {
            (Some(a), Some(e)) => pairs.push((stem, a, e)),
            (Some(_), None) => {
                warn!("{stem}: no matching .tacemb file, skipped");
                missing.push(stem);
            }
            (None, Some(_)) => {
                warn!("{stem}: no matching .json annotation, skipped");
                missing.push(stem);
            }
            (None, None) => {}
        }
    }
    Ok((pairs, missing))
}

#[derive(Debug, Serialize)]
pub struct VideoRow {
    pub video_id: String,
    pub f_measure: f64,
    pub n_partitions: usize,
    pub n_keyframes: usize,
}

#[derive(Debug, Serialize)]
struct CorpusReport<'a, R> {
    videos: &'a [R],
    mean_f_measure: f64,
    failed: &'a [String],
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

fn pool(jobs: Option<u16>) -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.into());
    }
    builder.build().map_err(|e| CliError::Data(e.to_string()))
}

fn evaluate_one(annotation: &Path, embedding: &Path, config: &PipelineConfig) -> Result<VideoRow, CliError> {
    let video = with_path(annotation, format::load_annotation(annotation))?;
    let set = with_path(embedding, format::load_tacemb(embedding))?;
    let result = with_path(embedding, evaluate_pipeline(&video, &set, config))?;
    Ok(VideoRow {
        video_id: video.video_id,
        f_measure: result.eval.f_measure,
        n_partitions: result.output.partitions.len(),
        n_keyframes: result.output.keyframes.len(),
    })
}

fn write_table<R: Serialize>(
    rows: &[R],
    mean_row: &[String],
    mean_f: f64,
    failed: &[String],
    format: OutputFormat,
) -> Result<Vec<u8>, CliError> {
    match format {
        OutputFormat::Json => Ok(to_json(&CorpusReport { videos: rows, mean_f_measure: mean_f, failed })),
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in rows {
                w.serialize(row).map_err(|e| CliError::Data(e.to_string()))?;
            }
            w.write_record(mean_row).map_err(|e| CliError::Data(e.to_string()))?;
            w.into_inner().map_err(|e| CliError::Data(e.to_string()))
        }
    }
}

fn finish(failed: &[String], what: &str) -> Result<(), CliError> {
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Data(format!("{} {what} failed or unpaired: {}", failed.len(), failed.join(", "))))
    }
}

pub fn cmd_evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = args.config.to_config()?;
    let (pairs, mut failed) = discover(&args.dir)?;
    if pairs.is_empty() {
        return Err(CliError::Data(format!("no videos found in {}", args.dir.display())));
    }
    let results: Vec<(String, Result<VideoRow, CliError>)> = pool(args.jobs)?.install(|| {
        pairs
            .par_iter()
            .map(|(stem, a, e)| (stem.clone(), evaluate_one(a, e, &config)))
            .collect()
    });
    let mut rows = Vec::new();
    for (stem, r) in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => {
                warn!("{stem}: {e}");
                failed.push(stem);
            }
        }
    }
    rows.sort_by(|a, b| a.video_id.cmp(&b.video_id));
    failed.sort();
    let mean_f = mean(rows.iter().map(|r| r.f_measure));
    let mean_row = vec![
        "mean".to_string(),
        mean_f.to_string(),
        mean(rows.iter().map(|r| r.n_partitions as f64)).to_string(),
        mean(rows.iter().map(|r| r.n_keyframes as f64)).to_string(),
    ];
    let table = write_table(&rows, &mean_row, mean_f, &failed, args.format)?;
    emit(args.output.as_deref(), out, &table)?;
    finish(&failed, "videos")
}

#[derive(Debug, Serialize)]
pub struct BaselineRow {
    pub video_id: String,
    pub f_measure: f64,
}

fn annotations(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut paths: Vec<PathBuf> = with_path(dir, fs::read_dir(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    Ok(paths)
}

pub fn cmd_baseline(args: &BaselineArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if !(args.budget > 0.0 && args.budget < 1.0) {
        return Err(CliError::Usage("budget must lie in (0, 1)".into()));
    }
    let paths = annotations(&args.dir)?;
    if paths.is_empty() {
        return Err(CliError::Data(format!("no videos found in {}", args.dir.display())));
    }
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for path in &paths {
        let result = format::load_annotation(path)
            .map_err(CliError::from)
            .and_then(|v: AnnotatedVideo| {
                let f = evaluator::random_baseline(&v, args.budget, args.runs as usize, args.seed, args.aggregation)?;
                Ok(BaselineRow { video_id: v.video_id, f_measure: f })
            });
        match result {
            Ok(row) => rows.push(row),
            Err(e) => {
                warn!("{}: {e}", path.display());
                failed.push(path.display().to_string());
            }
        }
    }
    rows.sort_by(|a, b| a.video_id.cmp(&b.video_id));
    let mean_f = mean(rows.iter().map(|r| r.f_measure));
    let table = write_table(&rows, &["mean".to_string(), mean_f.to_string()], mean_f, &failed, args.format)?;
    emit(args.output.as_deref(), out, &table)?;
    finish(&failed, "annotations")
}

#[derive(Debug, Serialize)]
pub struct InspectJson {
    pub total_frames: u64,
    pub fps: f64,
    pub rate: f64,
    pub num_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub sample_indices: Vec<u64>,
    /// Whether the stored indices equal the sampler's rule for this header.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub indices_match_sampler: Option<bool>,
    pub target_k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partitions: Option<Vec<Partition>>,
}

pub fn cmd_inspect(args: &InspectArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = args.config.to_config()?;
    let k = |n: usize| target_cluster_count(n, config.k_max, config.k_midpoint, config.k_scale);
    let report = match (&args.file, args.meta) {
        (Some(path), _) => {
            let set = with_path(path, format::load_tacemb(path))?;
            let expected = sampler::sample_indices(&set.meta, set.map.rate)?;
            let output = with_path(path, summarize(&set, &config))?;
            InspectJson {
                total_frames: set.meta.total_frames,
                fps: set.meta.fps,
                rate: set.map.rate,
                num_samples: set.num_samples(),
                dim: Some(set.dim()),
                indices_match_sampler: Some(expected.sample_indices == set.map.sample_indices),
                sample_indices: set.map.sample_indices,
                target_k: output.clustering.target_k,
                partitions: Some(output.partitions.partitions),
            }
        }
        (None, Some(meta)) => {
            let video = VideoMeta::new(meta.total_frames, meta.fps).map_err(|e| CliError::Usage(e.to_string()))?;
            let map = sampler::sample_indices(&video, config.rate)?;
            InspectJson {
                total_frames: video.total_frames,
                fps: video.fps,
                rate: config.rate,
                num_samples: map.len(),
                dim: None,
                indices_match_sampler: None,
                target_k: k(map.len()),
                sample_indices: map.sample_indices,
                partitions: None,
            }
        }
        (None, None) => return Err(CliError::Usage("either a file or --meta is required".into())),
    };
    emit(None, out, &to_json(&report))
}
