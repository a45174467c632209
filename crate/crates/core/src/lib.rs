//! Training-free video summarization from per-frame embeddings.
//!
//! The pipeline samples frames at a fixed rate, reduces their embeddings with
//! PCA and t-SNE, clusters them coarse-to-fine (BIRCH leaf entries merged by
//! average linkage), turns the labels into temporally contiguous partitions,
//! then picks keyframes and importance scores per partition. The
//! [`evaluator`] converts frame scores into a knapsack summary and scores it
//! against user annotations.

pub mod clusterer;
pub mod error;
pub mod evaluator;
pub mod model;
pub mod partitioner;
pub mod pipeline;
pub mod reducer;
pub mod sampler;
pub mod scorer;

pub use error::{Error, Result};
pub use evaluator::{AnnotatedVideo, EvalResult};
pub use model::{
    BiasMode, EmbeddingSet, Interpolation, KeyframeRule, LabelSequence, Partition, PartitionSet,
    PipelineConfig, ReducedEmbedding, SampleMap, SummaryResult, UserAggregation, VideoMeta,
};
pub use pipeline::{evaluate_pipeline, summarize, PipelineEvaluation, PipelineOutput};
pub use nalgebra;
