//! Turns per-sample cluster labels into temporally contiguous partitions.
//!
//! Order of stages: outlier elimination, majority-vote smoothing, run
//! extraction, then minimum-length refinement.

use crate::model::{LabelSequence, Partition, PartitionSet};

/// Relabels isolated samples whose two neighbours agree. Runs one pass left
/// to right, reading labels already rewritten earlier in the pass; the first
/// and last samples are never touched.
pub fn eliminate_outliers(labels: &LabelSequence) -> LabelSequence {
    let mut out = labels.labels.clone();
    for i in 1..out.len().saturating_sub(1) {
        let (prev, cur, next) = (out[i - 1], out[i], out[i + 1]);
        if cur != prev && cur != next && prev == next {
            out[i] = prev;
        }
    }
    LabelSequence {
        labels: out,
        num_clusters: labels.num_clusters,
    }
}

/// Sliding-window mode over `[i - w/2, i + w/2]`, clipped at the ends.
/// Ties go to the label occurring closest to `i`, then to the smaller label.
pub fn smooth(labels: &LabelSequence, window: usize) -> LabelSequence {
    let input = &labels.labels;
    let n = input.len();
    let half = window / 2;
    let mut counts: Vec<(usize, usize, usize)> = Vec::new(); // (label, count, nearest offset)
    let out = (0..n)
        .map(|i| {
            counts.clear();
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            for (j, &l) in input.iter().enumerate().take(hi + 1).skip(lo) {
                let off = j.abs_diff(i);
                match counts.iter_mut().find(|c| c.0 == l) {
                    Some(c) => {
                        c.1 += 1;
                        c.2 = c.2.min(off);
                    }
                    None => counts.push((l, 1, off)),
                }
            }
            counts
                .iter()
                .min_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)).then(a.0.cmp(&b.0)))
                .map(|c| c.0)
                .expect("window is never empty")
        })
        .collect();
    LabelSequence {
        labels: out,
        num_clusters: labels.num_clusters,
    }
}

/// Maximal runs of equal labels, in temporal order.
pub fn to_partitions(labels: &LabelSequence) -> PartitionSet {
    let mut partitions: Vec<Partition> = Vec::new();
    for (i, &l) in labels.labels.iter().enumerate() {
        match partitions.last_mut() {
            Some(p) if p.label == l => p.end = i + 1,
            _ => partitions.push(Partition { start: i, end: i + 1, label: l }),
        }
    }
    PartitionSet { partitions }
}

/// Like [`refine`], also returning the number of merge iterations performed.
pub fn refine_counted(parts: &PartitionSet, min_len: usize) -> (PartitionSet, usize) {
    let mut ps = parts.partitions.clone();
    let mut iterations = 0;
    while ps.len() > 1 {
        // Shortest partition, first one on ties.
        let (idx, shortest) = ps
            .iter()
            .enumerate()
            .min_by_key(|(i, p)| (p.len(), *i))
            .map(|(i, p)| (i, p.len()))
            .expect("non-empty");
        if shortest >= min_len {
            break;
        }
        let removed = ps.remove(idx);
        if idx == 0 {
            ps[0].start = removed.start;
        } else if idx == ps.len() {
            ps[idx - 1].end = removed.end;
        } else {
            let cut = removed.start + removed.len().div_ceil(2);
            ps[idx - 1].end = cut;
            ps[idx].start = cut;
        }
        iterations += 1;
    }
    (PartitionSet { partitions: ps }, iterations)
}

/// Repeatedly dissolves the shortest partition into its neighbours until every
/// partition has at least `min_len` samples or only one partition remains.
///
/// An interior partition is split at its midpoint: the first `ceil(len / 2)`
/// samples join the left neighbour and the rest join the right one. A first
/// or last partition is merged whole into its only neighbour. Absorbing
/// neighbours keep their labels.
pub fn refine(parts: &PartitionSet, min_len: usize) -> PartitionSet {
    refine_counted(parts, min_len).0
}

/// Full temporal partitioning of raw cluster labels.
pub fn partition(labels: &LabelSequence, window: usize, min_len: usize) -> PartitionSet {
    let cleaned = eliminate_outliers(labels);
    let smoothed = smooth(&cleaned, window);
    refine(&to_partitions(&smoothed), min_len)
}
