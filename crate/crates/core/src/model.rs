//! Domain types shared by every pipeline stage.
//!
//! Indices are 0-based everywhere. Sample indices address rows of the
//! embedding matrix; frame indices address frames of the source video.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoMeta {
    pub total_frames: u64,
    pub fps: f64,
    pub duration_s: f64,
}

impl VideoMeta {
    pub fn new(total_frames: u64, fps: f64) -> Result<Self> {
        let meta = VideoMeta {
            total_frames,
            fps,
            duration_s: total_frames as f64 / fps,
        };
        meta.check()?;
        Ok(meta)
    }

    pub fn check(&self) -> Result<()> {
        if self.total_frames < 1 {
            return Err(Error::invariant("VideoMeta", "total_frames must be >= 1"));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::invariant("VideoMeta", format!("fps must be > 0, got {}", self.fps)));
        }
        let expected = self.total_frames as f64 / self.fps;
        if (self.duration_s - expected).abs() > 1e-9 * expected.max(1.0) {
            return Err(Error::invariant("VideoMeta", "duration_s must equal total_frames / fps"));
        }
        Ok(())
    }
}

/// Original-frame index of every sample, plus the rate used to pick them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMap {
    pub sample_indices: Vec<u64>,
    pub rate: f64,
}

impl SampleMap {
    pub fn len(&self) -> usize {
        self.sample_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_indices.is_empty()
    }

    pub fn check(&self, total_frames: u64) -> Result<()> {
        if self.sample_indices.is_empty() {
            return Err(Error::invariant("SampleMap", "at least one sample required"));
        }
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(Error::invariant("SampleMap", "rate must be > 0"));
        }
        if self.sample_indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invariant("SampleMap", "sample indices must be strictly increasing"));
        }
        if let Some(&last) = self.sample_indices.last() {
            if last >= total_frames {
                return Err(Error::invariant(
                    "SampleMap",
                    format!("sample index {last} out of range for {total_frames} frames"),
                ));
            }
        }
        Ok(())
    }
}

/// Per-sample embedding matrix, one row per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSet {
    pub meta: VideoMeta,
    pub map: SampleMap,
    pub data: DMatrix<f64>,
}

impl EmbeddingSet {
    pub fn new(meta: VideoMeta, map: SampleMap, data: DMatrix<f64>) -> Result<Self> {
        let set = EmbeddingSet { meta, map, data };
        set.check()?;
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn num_samples(&self) -> usize {
        self.data.nrows()
    }

    pub fn check(&self) -> Result<()> {
        self.meta.check()?;
        self.map.check(self.meta.total_frames)?;
        if self.data.nrows() != self.map.len() {
            return Err(Error::Length {
                what: "EmbeddingSet rows",
                expected: self.map.len(),
                actual: self.data.nrows(),
            });
        }
        if self.data.ncols() == 0 {
            return Err(Error::invariant("EmbeddingSet", "embedding dimension must be >= 1"));
        }
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invariant("EmbeddingSet", "non-finite embedding entry"));
        }
        Ok(())
    }
}

/// Low-dimensional embedding produced by the reducer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedEmbedding {
    pub data: DMatrix<f64>,
}

impl ReducedEmbedding {
    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn num_samples(&self) -> usize {
        self.data.nrows()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.data.row(i).iter().copied().collect()
    }

    pub fn check(&self, source: &EmbeddingSet) -> Result<()> {
        if self.data.nrows() != source.num_samples() {
            return Err(Error::Length {
                what: "ReducedEmbedding rows",
                expected: source.num_samples(),
                actual: self.data.nrows(),
            });
        }
        if self.data.ncols() >= source.dim() {
            return Err(Error::invariant("ReducedEmbedding", "reduced dim must be below source dim"));
        }
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invariant("ReducedEmbedding", "non-finite entry"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSequence {
    pub labels: Vec<usize>,
    pub num_clusters: usize,
}

impl LabelSequence {
    /// Builds a sequence whose ids are renumbered to `[0, n)` in order of
    /// first appearance.
    pub fn compacted(raw: &[usize]) -> Self {
        let mut remap = std::collections::HashMap::new();
        let labels = raw
            .iter()
            .map(|&l| {
                let next = remap.len();
                *remap.entry(l).or_insert(next)
            })
            .collect();
        LabelSequence {
            labels,
            num_clusters: remap.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn check(&self) -> Result<()> {
        let mut seen = vec![false; self.num_clusters];
        for &l in &self.labels {
            if l >= self.num_clusters {
                return Err(Error::invariant(
                    "LabelSequence",
                    format!("label {l} outside [0, {})", self.num_clusters),
                ));
            }
            seen[l] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::invariant("LabelSequence", format!("cluster {missing} never occurs")));
        }
        Ok(())
    }
}

/// Half-open run of samples `[start, end)` carrying one label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub start: usize,
    pub end: usize,
    pub label: usize,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSet {
    pub partitions: Vec<Partition>,
}

impl PartitionSet {
    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }

    pub fn num_samples(&self) -> usize {
        self.partitions.last().map_or(0, |p| p.end)
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.partitions.iter().map(Partition::len).collect()
    }

    /// Index of the partition containing `sample`.
    pub fn partition_of(&self, sample: usize) -> Option<usize> {
        let idx = self.partitions.partition_point(|p| p.end <= sample);
        (idx < self.partitions.len() && self.partitions[idx].start <= sample).then_some(idx)
    }

    /// Checks contiguity and exhaustiveness over `num_samples` samples.
    pub fn check(&self, num_samples: usize) -> Result<()> {
        let Some(first) = self.partitions.first() else {
            return Err(Error::invariant("PartitionSet", "no partitions"));
        };
        if first.start != 0 {
            return Err(Error::invariant("PartitionSet", "first partition must start at 0"));
        }
        for p in &self.partitions {
            if p.is_empty() {
                return Err(Error::invariant("PartitionSet", "empty partition"));
            }
        }
        for w in self.partitions.windows(2) {
            if w[0].end != w[1].start {
                return Err(Error::invariant(
                    "PartitionSet",
                    format!("gap or overlap between {} and {}", w[0].end, w[1].start),
                ));
            }
        }
        if self.num_samples() != num_samples {
            return Err(Error::invariant(
                "PartitionSet",
                format!("covers {} samples, expected {num_samples}", self.num_samples()),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryResult {
    pub keyframes: Vec<usize>,
    pub sample_scores: Vec<f64>,
    pub frame_scores: Vec<f64>,
    pub selected_segments: Vec<usize>,
}

impl SummaryResult {
    pub fn check(&self, parts: &PartitionSet) -> Result<()> {
        let n = self.sample_scores.len();
        if self.keyframes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invariant("SummaryResult", "keyframes must be sorted and unique"));
        }
        if self.keyframes.iter().any(|&k| k >= n) {
            return Err(Error::invariant("SummaryResult", "keyframe outside sample range"));
        }
        let bad = |v: &f64| !v.is_finite() || *v < 0.0;
        if self.sample_scores.iter().any(bad) || self.frame_scores.iter().any(bad) {
            return Err(Error::invariant("SummaryResult", "scores must be finite and >= 0"));
        }
        parts.check(n)?;
        for (i, p) in parts.partitions.iter().enumerate() {
            if !self.keyframes.iter().any(|&k| p.start <= k && k < p.end) {
                return Err(Error::invariant(
                    "SummaryResult",
                    format!("partition {i} has no keyframe"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KeyframeRule {
    Mean,
    Middle,
    Ends,
    MiddleEnds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    Cosine,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BiasMode {
    /// Keyframes are raised to `(1 + B)` times the flat score.
    IncreaseKeyframes,
    /// Keyframes keep the flat score; the troughs between them drop to `(1 - B)`.
    DecreaseOthers,
}

/// How per-annotator f-scores are folded into one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UserAggregation {
    Max,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Target sample rate in samples per second.
    pub rate: f64,
    pub pca_dim: usize,
    pub tsne_dim: usize,
    pub perplexity: f64,
    pub tsne_iters: usize,
    pub learning_rate: f64,
    /// Upper bound on the number of fine clusters.
    pub k_max: usize,
    pub k_midpoint: f64,
    pub k_scale: f64,
    pub birch_branching: usize,
    pub birch_threshold_factor: f64,
    /// Majority-vote window, odd.
    pub window: usize,
    /// Minimum partition length after refinement.
    pub min_len: usize,
    pub keyframe_rule: KeyframeRule,
    pub interp: Interpolation,
    pub bias_mode: BiasMode,
    pub bias: f64,
    pub seed: u64,
    /// Summary length as a fraction of the video's frames.
    pub budget: f64,
    pub aggregation: UserAggregation,
    /// When false, partitions are the raw runs of cluster labels
    /// (no outlier removal, smoothing or refinement).
    pub temporal: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            rate: 4.0,
            pca_dim: 34,
            tsne_dim: 2,
            perplexity: 30.0,
            tsne_iters: 1000,
            learning_rate: 200.0,
            k_max: 16,
            k_midpoint: 200.0,
            k_scale: 100.0,
            birch_branching: 50,
            birch_threshold_factor: 0.5,
            window: 5,
            min_len: 4,
            keyframe_rule: KeyframeRule::MiddleEnds,
            interp: Interpolation::Cosine,
            bias_mode: BiasMode::IncreaseKeyframes,
            bias: 0.5,
            seed: 0,
            budget: 0.15,
            aggregation: UserAggregation::Max,
            temporal: true,
        }
    }
}

impl PipelineConfig {
    /// Returns the config if every field is in range.
    pub fn validate(self) -> Result<Self> {
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(Error::config("rate", "rate must be > 0"));
        }
        if self.tsne_dim < 1 {
            return Err(Error::config("tsne_dim", "tsne_dim must be >= 1"));
        }
        if self.tsne_dim >= self.pca_dim {
            return Err(Error::config("pca_dim", "pca_dim must exceed tsne_dim"));
        }
        if !(self.perplexity.is_finite() && self.perplexity >= 1.0) {
            return Err(Error::config("perplexity", "perplexity must be >= 1"));
        }
        if self.tsne_iters < 1 {
            return Err(Error::config("tsne_iters", "at least one iteration required"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config("learning_rate", "learning rate must be > 0"));
        }
        if self.k_max < 2 {
            return Err(Error::config("k_max", "k_max must be >= 2"));
        }
        if !self.k_midpoint.is_finite() {
            return Err(Error::config("k_midpoint", "k_midpoint must be finite"));
        }
        if !(self.k_scale.is_finite() && self.k_scale > 0.0) {
            return Err(Error::config("k_scale", "k_scale must be > 0"));
        }
        if self.birch_branching < 2 {
            return Err(Error::config("birch_branching", "branching factor must be >= 2"));
        }
        if !(self.birch_threshold_factor.is_finite() && self.birch_threshold_factor >= 0.0) {
            return Err(Error::config("birch_threshold_factor", "threshold factor must be >= 0"));
        }
        if self.window == 0 || self.window.is_multiple_of(2) {
            return Err(Error::config("window", "window must be odd"));
        }
        if self.min_len < 1 {
            return Err(Error::config("min_len", "min_len must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.bias) {
            return Err(Error::config("bias", "bias out of range"));
        }
        if !(self.budget > 0.0 && self.budget < 1.0) {
            return Err(Error::config("budget", "budget must lie in (0, 1)"));
        }
        Ok(self)
    }

    /// Checks the dimension-dependent invariant `pca_dim <= D`.
    pub fn check_embedding_dim(&self, dim: usize) -> Result<()> {
        if self.pca_dim > dim {
            return Err(Error::config(
                "pca_dim",
                format!("pca_dim {} exceeds embedding dimension {dim}", self.pca_dim),
            ));
        }
        Ok(())
    }
}
