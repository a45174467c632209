//! Two-stage dimensionality reduction: PCA followed by t-SNE.

mod pca;
mod tsne;

pub use pca::{pca_fit_transform, PcaModel};
pub use tsne::{
    conditional_affinities, effective_perplexity, kl_of_embedding, tsne, ConditionalAffinities,
    TsneOutput, TsneParams,
};

use crate::error::Result;
use crate::model::{EmbeddingSet, PipelineConfig, ReducedEmbedding};

#[derive(Debug, Clone)]
pub struct Reduction {
    pub pca: PcaModel,
    pub tsne: TsneOutput,
}

impl Reduction {
    pub fn embedding(&self) -> &ReducedEmbedding {
        &self.tsne.embedding
    }
}

/// Runs PCA then t-SNE with the dimensions and schedule from `config`.
///
/// The PCA dimension is capped at the sample count so that short videos
/// still reduce.
pub fn reduce(set: &EmbeddingSet, config: &PipelineConfig) -> Result<Reduction> {
    config.check_embedding_dim(set.dim())?;
    let pca_dim = config.pca_dim.min(set.num_samples());
    let (pca, projected) = pca_fit_transform(&set.data, pca_dim)?;
    let params = TsneParams {
        dim: config.tsne_dim,
        perplexity: config.perplexity,
        learning_rate: config.learning_rate,
        iters: config.tsne_iters,
        seed: config.seed,
        ..TsneParams::default()
    };
    let tsne = tsne(&projected, &params)?;
    Ok(Reduction { pca, tsne })
}
