//! Exact t-SNE.
//!
//! Input affinities are Gaussian with a per-point bandwidth found by
//! bisection so that each conditional distribution has entropy
//! `log2(perplexity)` bits. Output affinities use a Student-t kernel and the
//! KL divergence is minimised by momentum gradient descent with per-parameter
//! gains and an early-exaggeration phase.
//!
//! All per-row work is computed independently and reduced in a fixed order,
//! so results do not depend on the number of rayon threads.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ReducedEmbedding;

const ENTROPY_TOL_BITS: f64 = 1e-7;
const BISECTION_STEPS: usize = 200;
const MIN_GAIN: f64 = 0.01;
const TINY: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneParams {
    pub dim: usize,
    pub perplexity: f64,
    pub learning_rate: f64,
    pub iters: usize,
    pub exaggeration: f64,
    pub exaggeration_iters: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch_iter: usize,
    /// Record the (unexaggerated) KL divergence every this many iterations.
    pub kl_every: usize,
    pub seed: u64,
}

impl Default for TsneParams {
    fn default() -> Self {
        TsneParams {
            dim: 2,
            perplexity: 30.0,
            learning_rate: 200.0,
            iters: 1000,
            exaggeration: 12.0,
            exaggeration_iters: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch_iter: 250,
            kl_every: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TsneOutput {
    pub embedding: ReducedEmbedding,
    /// `(iterations completed, KL(P || Q))`, always including the final iteration.
    pub kl_trace: Vec<(usize, f64)>,
    pub perplexity_used: f64,
}

impl TsneOutput {
    pub fn kl_at(&self, iter: usize) -> Option<f64> {
        self.kl_trace.iter().find(|(i, _)| *i == iter).map(|(_, kl)| *kl)
    }
}

/// Row-conditional input affinities `p(j | i)`.
#[derive(Debug, Clone)]
pub struct ConditionalAffinities {
    pub n: usize,
    /// Row-major `n x n`, zero diagonal, rows sum to one.
    pub p: Vec<f64>,
    /// Precision `1 / (2 sigma^2)` per point, relative to squared distances.
    pub betas: Vec<f64>,
    pub entropies_bits: Vec<f64>,
    pub target_bits: f64,
}

fn squared_distances(rows: &[f64], n: usize, d: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let xi = &rows[i * d..(i + 1) * d];
        for (j, slot) in row.iter_mut().enumerate() {
            let xj = &rows[j * d..(j + 1) * d];
            *slot = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
        }
    });
    out
}

fn row_major(x: &DMatrix<f64>) -> Vec<f64> {
    let (n, d) = x.shape();
    let mut out = Vec::with_capacity(n * d);
    for i in 0..n {
        out.extend(x.row(i).iter());
    }
    out
}

/// Entropy in bits and unnormalised weights for one row at precision `beta`.
/// `shifted` holds squared distances minus the row minimum, `None` on the diagonal.
fn row_entropy(shifted: &[Option<f64>], beta: f64, weights: &mut [f64]) -> f64 {
    let mut sum = 0.0;
    let mut weighted = 0.0;
    for (w, s) in weights.iter_mut().zip(shifted) {
        *w = match s {
            Some(s) => (-beta * s).exp(),
            None => 0.0,
        };
        sum += *w;
        if let Some(s) = s {
            weighted += *w * s;
        }
    }
    (sum.ln() + beta * weighted / sum) / std::f64::consts::LN_2
}

/// Finds per-point Gaussian bandwidths matching the target perplexity.
pub fn conditional_affinities(x: &DMatrix<f64>, perplexity: f64) -> Result<ConditionalAffinities> {
    let (n, d) = x.shape();
    if n < 2 {
        return Err(Error::Degenerate("t-SNE needs at least 2 points".into()));
    }
    let rows = row_major(x);
    let dist = squared_distances(&rows, n, d);
    let target = perplexity.log2();

    let solved: Vec<(Vec<f64>, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = &dist[i * n..(i + 1) * n];
            let dmin = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, v)| *v)
                .fold(f64::INFINITY, f64::min);
            let shifted: Vec<Option<f64>> = row
                .iter()
                .enumerate()
                .map(|(j, v)| (j != i).then(|| v - dmin))
                .collect();
            let scale = {
                let s: f64 = shifted.iter().flatten().sum::<f64>() / (n - 1) as f64;
                if s > 0.0 { s } else { 1.0 }
            };

            let mut weights = vec![0.0; n];
            // Entropy decreases in log(beta); bisect over u = ln(beta * scale).
            let (mut lo, mut hi) = (-50.0f64, 50.0f64);
            let mut best = (f64::INFINITY, 0.0f64, 0.0f64);
            for _ in 0..BISECTION_STEPS {
                let u = 0.5 * (lo + hi);
                let beta = u.exp() / scale;
                let h = row_entropy(&shifted, beta, &mut weights);
                let err = h - target;
                if err.abs() < best.0 {
                    best = (err.abs(), beta, h);
                }
                if err.abs() < ENTROPY_TOL_BITS {
                    break;
                }
                if err > 0.0 {
                    lo = u;
                } else {
                    hi = u;
                }
            }
            let (_, beta, h) = best;
            row_entropy(&shifted, beta, &mut weights);
            let sum: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= sum);
            (weights, beta, h)
        })
        .collect();

    let mut p = Vec::with_capacity(n * n);
    let mut betas = Vec::with_capacity(n);
    let mut entropies_bits = Vec::with_capacity(n);
    for (row, beta, h) in solved {
        p.extend(row);
        betas.push(beta);
        entropies_bits.push(h);
    }
    Ok(ConditionalAffinities {
        n,
        p,
        betas,
        entropies_bits,
        target_bits: target,
    })
}

/// Symmetric joint affinities `P = (P_cond + P_cond^T) / sum`, floored at `1e-12`.
fn joint_affinities(cond: &ConditionalAffinities) -> Vec<f64> {
    let n = cond.n;
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = cond.p[i * n + j] + cond.p[j * n + i];
        }
    }
    let total: f64 = p.iter().sum();
    for (k, v) in p.iter_mut().enumerate() {
        *v = if k / n == k % n { 0.0 } else { (*v / total).max(TINY) };
    }
    p
}

/// Student-t kernel numerators `1 / (1 + |y_i - y_j|^2)` (zero diagonal) and their total.
fn student_kernel(y: &[f64], n: usize, dim: usize) -> (Vec<f64>, f64) {
    let mut num = vec![0.0; n * n];
    let row_sums: Vec<f64> = num
        .par_chunks_mut(n)
        .enumerate()
        .map(|(i, row)| {
            let yi = &y[i * dim..(i + 1) * dim];
            let mut s = 0.0;
            for (j, slot) in row.iter_mut().enumerate() {
                if j == i {
                    continue;
                }
                let yj = &y[j * dim..(j + 1) * dim];
                let d2: f64 = yi.iter().zip(yj).map(|(a, b)| (a - b) * (a - b)).sum();
                *slot = 1.0 / (1.0 + d2);
                s += *slot;
            }
            s
        })
        .collect();
    let z = row_sums.iter().sum();
    (num, z)
}

fn kl_divergence(p: &[f64], num: &[f64], z: f64, n: usize) -> f64 {
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let pij = p[i * n + j];
            let qij = (num[i * n + j] / z).max(TINY);
            kl += pij * (pij / qij).ln();
        }
    }
    kl
}

/// KL divergence between the input affinities of `x` and the output embedding `y`.
pub fn kl_of_embedding(x: &DMatrix<f64>, y: &DMatrix<f64>, perplexity: f64) -> Result<f64> {
    let cond = conditional_affinities(x, perplexity)?;
    let p = joint_affinities(&cond);
    let n = y.nrows();
    let (num, z) = student_kernel(&row_major(y), n, y.ncols());
    Ok(kl_divergence(&p, &num, z, n))
}

/// Lowers the perplexity to `floor((n - 1) / 3)` (at least 1) when the input is
/// too small for it.
pub fn effective_perplexity(n: usize, perplexity: f64) -> f64 {
    if (n as f64) > 3.0 * perplexity {
        perplexity
    } else {
        let lowered = (((n.saturating_sub(1)) / 3) as f64).max(1.0);
        log::warn!("perplexity {perplexity} too large for {n} points; using {lowered}");
        lowered
    }
}

pub fn tsne(x: &DMatrix<f64>, params: &TsneParams) -> Result<TsneOutput> {
    let n = x.nrows();
    let dim = params.dim;
    if dim == 0 {
        return Err(Error::config("tsne_dim", "output dimension must be >= 1"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite t-SNE input".into()));
    }
    let perplexity = effective_perplexity(n, params.perplexity);
    let cond = conditional_affinities(x, perplexity)?;
    let p = joint_affinities(&cond);

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let normal = Normal::new(0.0, 1e-4).expect("valid normal");
    let mut y: Vec<f64> = (0..n * dim).map(|_| normal.sample(&mut rng)).collect();
    let mut update = vec![0.0; n * dim];
    let mut gains = vec![1.0f64; n * dim];
    let mut kl_trace = Vec::new();

    for iter in 0..params.iters {
        let exaggeration = if iter < params.exaggeration_iters { params.exaggeration } else { 1.0 };
        let momentum = if iter < params.momentum_switch_iter {
            params.initial_momentum
        } else {
            params.final_momentum
        };

        let (num, z) = student_kernel(&y, n, dim);
        let mut grad = vec![0.0; n * dim];
        grad.par_chunks_mut(dim).enumerate().for_each(|(i, g)| {
            let yi = &y[i * dim..(i + 1) * dim];
            for j in 0..n {
                if j == i {
                    continue;
                }
                let nij = num[i * n + j];
                let coeff = (exaggeration * p[i * n + j] - nij / z) * nij;
                let yj = &y[j * dim..(j + 1) * dim];
                for k in 0..dim {
                    g[k] += 4.0 * coeff * (yi[k] - yj[k]);
                }
            }
        });
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numerical(format!("non-finite t-SNE gradient at iteration {iter}")));
        }

        for k in 0..n * dim {
            gains[k] = if (grad[k] > 0.0) != (update[k] > 0.0) {
                gains[k] + 0.2
            } else {
                (gains[k] * 0.8).max(MIN_GAIN)
            };
            update[k] = momentum * update[k] - params.learning_rate * gains[k] * grad[k];
            y[k] += update[k];
        }
        for k in 0..dim {
            let mean = (0..n).map(|i| y[i * dim + k]).sum::<f64>() / n as f64;
            (0..n).for_each(|i| y[i * dim + k] -= mean);
        }

        let done = iter + 1;
        if done == params.iters || (params.kl_every > 0 && done % params.kl_every == 0) {
            let (num, z) = student_kernel(&y, n, dim);
            kl_trace.push((done, kl_divergence(&p, &num, z, n)));
        }
    }

    Ok(TsneOutput {
        embedding: ReducedEmbedding {
            data: DMatrix::from_row_slice(n, dim, &y),
        },
        kl_trace,
        perplexity_used: perplexity,
    })
}
