//! Synthetic inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tacsum_core::model::{EmbeddingSet, SampleMap, VideoMeta};
use tacsum_core::nalgebra::DMatrix;

/// `blocks` temporally ordered Gaussian blobs of `per_block` samples each in
/// `dim` dimensions, sampled from a 30 fps video at 4 samples per second.
pub fn blob_video(blocks: usize, per_block: usize, dim: usize, seed: u64) -> EmbeddingSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).expect("valid normal");
    let n = blocks * per_block;
    let centers: Vec<Vec<f64>> = (0..blocks)
        .map(|_| (0..dim).map(|_| rng.random_range(-4.0..4.0)).collect())
        .collect();
    let data = DMatrix::from_fn(n, dim, |i, j| centers[i / per_block][j] + noise.sample(&mut rng));
    let total = (n as u64).div_ceil(4) * 30;
    let meta = VideoMeta::new(total, 30.0).expect("valid meta");
    let map = tacsum_core::sampler::sample_indices(&meta, 4.0).expect("valid rate");
    let map = SampleMap {
        sample_indices: map.sample_indices[..n].to_vec(),
        rate: 4.0,
    };
    EmbeddingSet::new(meta, map, data).expect("valid embedding set")
}
