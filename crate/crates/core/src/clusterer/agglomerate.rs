use crate::error::{Error, Result};
use crate::model::{LabelSequence, ReducedEmbedding};

/// Centroid of every coarse cluster in the reduced space.
pub fn coarse_centroids(reduced: &ReducedEmbedding, coarse: &LabelSequence) -> Result<Vec<Vec<f64>>> {
    if coarse.len() != reduced.num_samples() {
        return Err(Error::Length {
            what: "coarse labels",
            expected: reduced.num_samples(),
            actual: coarse.len(),
        });
    }
    let dim = reduced.dim();
    let mut sums = vec![vec![0.0; dim]; coarse.num_clusters];
    let mut counts = vec![0usize; coarse.num_clusters];
    for (i, &l) in coarse.labels.iter().enumerate() {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(reduced.data.row(i).iter()) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c == 0 {
            return Err(Error::invariant("LabelSequence", "empty coarse cluster"));
        }
        s.iter_mut().for_each(|v| *v /= c as f64);
    }
    Ok(sums)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

/// Average-linkage merging of the given points down to `k` groups.
///
/// Returns, for each point, the id of its group: the smallest point index in
/// that group. The closest pair is merged first; ties go to the
/// lexicographically smallest `(id1, id2)`.
pub fn average_linkage(points: &[Vec<f64>], k: usize) -> Vec<usize> {
    let n = points.len();
    let mut rep: Vec<usize> = (0..n).collect();
    if k >= n {
        return rep;
    }
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = euclid(&points[i], &points[j]);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }

    for _ in 0..n - k {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in (0..n).filter(|&i| active[i]) {
            for j in (i + 1..n).filter(|&j| active[j]) {
                let d = dist[i * n + j];
                if best.is_none_or(|(_, _, bd)| d < bd) {
                    best = Some((i, j, d));
                }
            }
        }
        let (a, b, _) = best.expect("at least two active clusters");
        // Lance-Williams update for average linkage; `a < b` keeps the smaller id.
        let (sa, sb) = (size[a] as f64, size[b] as f64);
        for c in (0..n).filter(|&c| active[c] && c != a && c != b) {
            let d = (sa * dist[a * n + c] + sb * dist[b * n + c]) / (sa + sb);
            dist[a * n + c] = d;
            dist[c * n + a] = d;
        }
        size[a] += size[b];
        active[b] = false;
        rep.iter_mut().filter(|r| **r == b).for_each(|r| *r = a);
    }
    rep
}

/// Merges coarse clusters into `k` fine clusters by average linkage on their
/// centroids. Output labels are compacted to `[0, k)` by first appearance.
pub fn agglomerate(reduced: &ReducedEmbedding, coarse: &LabelSequence, k: usize) -> Result<LabelSequence> {
    if k >= coarse.num_clusters {
        return Ok(LabelSequence::compacted(&coarse.labels));
    }
    let centroids = coarse_centroids(reduced, coarse)?;
    let rep = average_linkage(&centroids, k.max(1));
    let merged: Vec<usize> = coarse.labels.iter().map(|&l| rep[l]).collect();
    Ok(LabelSequence::compacted(&merged))
}
