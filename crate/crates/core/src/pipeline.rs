//! End-to-end summarization: reduce, cluster, partition, score, and
//! optionally evaluate against annotations.

use crate::clusterer::{self, Clustering};
use crate::error::{Error, Result};
use crate::evaluator::{self, AnnotatedVideo, EvalResult, Segment};
use crate::model::{EmbeddingSet, PartitionSet, PipelineConfig, SummaryResult};
use crate::partitioner;
use crate::reducer::{self, Reduction};
use crate::sampler;
use crate::scorer;

/// Every intermediate artifact of one pipeline run.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub reduction: Reduction,
    pub clustering: Clustering,
    pub partitions: PartitionSet,
    pub keyframes: Vec<usize>,
    pub flat_scores: Vec<f64>,
    pub sample_scores: Vec<f64>,
    pub frame_scores: Vec<f64>,
}

impl PipelineOutput {
    pub fn summary(&self, selected_segments: Vec<usize>) -> SummaryResult {
        SummaryResult {
            keyframes: self.keyframes.clone(),
            sample_scores: self.sample_scores.clone(),
            frame_scores: self.frame_scores.clone(),
            selected_segments,
        }
    }
}

pub fn summarize(set: &EmbeddingSet, config: &PipelineConfig) -> Result<PipelineOutput> {
    let config = config.clone().validate()?;
    set.check()?;
    let reduction = reducer::reduce(set, &config)?;
    let reduced = reduction.embedding();
    let clustering = clusterer::cluster(reduced, &config)?;
    let partitions = if config.temporal {
        partitioner::partition(&clustering.fine, config.window, config.min_len)
    } else {
        partitioner::to_partitions(&clustering.fine)
    };
    partitions.check(set.num_samples())?;

    let keyframes = scorer::keyframes(&partitions, reduced, config.keyframe_rule);
    let flat_scores = scorer::flat_scores(&partitions);
    let sample_scores =
        scorer::biased_scores(&flat_scores, &keyframes, config.interp, config.bias_mode, config.bias)?;
    let frame_scores = sampler::expand(&set.map, &sample_scores, set.meta.total_frames)?;

    Ok(PipelineOutput {
        reduction,
        clustering,
        partitions,
        keyframes,
        flat_scores,
        sample_scores,
        frame_scores,
    })
}

/// Frame ranges covered by each partition, following the nearest-sample
/// assignment used to expand scores to frames.
pub fn partition_frame_segments(set: &EmbeddingSet, partitions: &PartitionSet) -> Result<Vec<Segment>> {
    let ids: Vec<f64> = partitions
        .partitions
        .iter()
        .enumerate()
        .flat_map(|(i, p)| std::iter::repeat_n(i as f64, p.len()))
        .collect();
    let per_frame = sampler::expand(&set.map, &ids, set.meta.total_frames)?;
    let mut segments: Vec<Segment> = Vec::with_capacity(partitions.len());
    for (f, id) in per_frame.iter().enumerate() {
        match segments.last_mut() {
            Some(seg) if per_frame[seg.0] == *id => seg.1 = f + 1,
            _ => segments.push((f, f + 1)),
        }
    }
    Ok(segments)
}

#[derive(Debug, Clone)]
pub struct PipelineEvaluation {
    pub output: PipelineOutput,
    pub eval: EvalResult,
}

pub fn evaluate_pipeline(video: &AnnotatedVideo, set: &EmbeddingSet, config: &PipelineConfig) -> Result<PipelineEvaluation> {
    video.check()?;
    if video.meta.total_frames != set.meta.total_frames {
        return Err(Error::invariant(
            "evaluate_pipeline",
            format!(
                "annotation has {} frames, embeddings were sampled from {}",
                video.meta.total_frames, set.meta.total_frames
            ),
        ));
    }
    let output = summarize(set, config)?;
    let eval = evaluator::evaluate_scores(video, &output.frame_scores, config.budget, config.aggregation)?;
    Ok(PipelineEvaluation { output, eval })
}
