//! Coarse-to-fine contextual clustering: BIRCH leaf entries, then
//! average-linkage merging down to a sigmoid-determined cluster count.

mod agglomerate;
mod birch;

pub use agglomerate::{agglomerate, average_linkage, coarse_centroids};
pub use birch::{absorption_threshold, birch_coarse, CfTree, ClusteringFeature};

use crate::error::Result;
use crate::model::{LabelSequence, PipelineConfig, ReducedEmbedding};

/// Number of fine clusters for `num_samples` samples:
/// `round(k_max / (1 + exp(-(n - midpoint) / scale)))`, clamped to
/// `[2, min(k_max, n)]` (and never above `n`).
pub fn target_cluster_count(num_samples: usize, k_max: usize, k_midpoint: f64, k_scale: f64) -> usize {
    let n = num_samples as f64;
    let raw = (k_max as f64 / (1.0 + (-(n - k_midpoint) / k_scale).exp())).round() as usize;
    raw.max(2).min(k_max).min(num_samples.max(1))
}

#[derive(Debug, Clone)]
pub struct Clustering {
    pub coarse: LabelSequence,
    pub fine: LabelSequence,
    pub target_k: usize,
}

pub fn cluster(reduced: &ReducedEmbedding, config: &PipelineConfig) -> Result<Clustering> {
    let target_k = target_cluster_count(reduced.num_samples(), config.k_max, config.k_midpoint, config.k_scale);
    let coarse = birch_coarse(reduced, config.birch_branching, config.birch_threshold_factor, config.seed)?;
    let fine = agglomerate(reduced, &coarse, target_k)?;
    Ok(Clustering { coarse, fine, target_k })
}
