//! Oracles and fixtures shared by the integration tests.
//!
//! Everything here is written independently of the library code it checks:
//! exhaustive search instead of dynamic programming, Jacobi rotations instead
//! of the library eigen solver, direct pairwise averages instead of
//! Lance-Williams updates.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tacsum_core::model::{EmbeddingSet, LabelSequence, VideoMeta};
use tacsum_core::nalgebra::DMatrix;
use tacsum_core::sampler;

/// Best total value over every subset whose weight fits `capacity`.
pub fn brute_force_knapsack(weights: &[usize], values: &[f64], capacity: usize) -> f64 {
    let n = weights.len();
    assert!(n <= 20);
    let mut best = 0.0f64;
    for mask in 0u32..(1 << n) {
        let mut w = 0;
        let mut v = 0.0;
        for i in 0..n {
            if mask & (1 << i) != 0 {
                w += weights[i];
                v += values[i];
            }
        }
        if w <= capacity && v > best {
            best = v;
        }
    }
    best
}

/// Eigenpairs of a symmetric matrix by cyclic Jacobi rotations, sorted by
/// decreasing eigenvalue. Eigenvectors are the columns of the returned matrix.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Projection onto the top `k` covariance eigenvectors, each flipped so its
/// largest-magnitude entry is positive.
pub fn oracle_pca(x: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let (n, d) = x.shape();
    let mean: Vec<f64> = (0..d).map(|j| x.column(j).sum() / n as f64).collect();
    let centered = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let (_, vecs) = jacobi_eigen(&cov);
    let mut basis = DMatrix::zeros(d, k);
    for c in 0..k {
        let col = vecs.column(c);
        let pivot = (0..d).max_by(|&a, &b| col[a].abs().total_cmp(&col[b].abs())).unwrap();
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..d {
            basis[(r, c)] = sign * col[r];
        }
    }
    centered * basis
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Average-linkage agglomeration recomputing every cluster distance from the
/// member points. Returns one cluster id per point; ids are the smallest
/// member index of each final cluster.
pub fn naive_average_linkage(points: &[Vec<f64>], k: usize) -> Vec<usize> {
    let mut clusters: Vec<Vec<usize>> = (0..points.len()).map(|i| vec![i]).collect();
    while clusters.len() > k.max(1) {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let mut total = 0.0;
                for &i in &clusters[a] {
                    for &j in &clusters[b] {
                        total += dist(&points[i], &points[j]);
                    }
                }
                let d = total / (clusters[a].len() * clusters[b].len()) as f64;
                if best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, a, b));
                }
            }
        }
        let (_, a, b) = best.unwrap();
        let moved = clusters.remove(b);
        clusters[a].extend(moved);
    }
    let mut out = vec![0; points.len()];
    for c in &clusters {
        let id = *c.iter().min().unwrap();
        for &i in c {
            out[i] = id;
        }
    }
    out
}

/// Groups indices by label value; the result is a canonical set-of-sets.
pub fn grouping(labels: &[usize]) -> Vec<Vec<usize>> {
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort();
    out
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DMatrix<f64> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    // Unequal column scales keep the covariance spectrum well separated.
    let scales: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..4.0)).collect();
    DMatrix::from_fn(n, d, |_, j| scales[j] * normal.sample(rng))
}

/// `blocks` temporally ordered Gaussian blobs of `per` samples each, unit
/// variance per coordinate, with centres `sep` apart pairwise. Sampled at 4
/// per second from a 30 fps video.
pub fn blob_sequence(blocks: usize, per: usize, dim: usize, sep: f64, seed: u64) -> EmbeddingSet {
    let n = blocks * per;
    let meta = VideoMeta::new((n as u64) * 30 / 4, 30.0).unwrap();
    let map = sampler::sample_indices(&meta, 4.0).unwrap();
    assert_eq!(map.len(), n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let offset = sep / std::f64::consts::SQRT_2;
    let data = DMatrix::from_fn(n, dim, |i, j| if j == i / per { offset } else { 0.0 })
        .map(|v| v + normal.sample(&mut rng));
    EmbeddingSet::new(meta, map, data).unwrap()
}

/// Random label sequence with runs of random length over `k` labels.
pub fn random_runs(rng: &mut ChaCha8Rng, n: usize, k: usize, max_run: usize) -> LabelSequence {
    let mut raw = Vec::with_capacity(n);
    while raw.len() < n {
        let label = rng.random_range(0..k);
        let run = rng.random_range(1..=max_run).min(n - raw.len());
        raw.extend(std::iter::repeat_n(label, run));
    }
    LabelSequence::compacted(&raw)
}
