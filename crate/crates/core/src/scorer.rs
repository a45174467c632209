//! Keyframe selection and per-sample importance scores.
//!
//! Scores start flat at the length of the containing partition and are then
//! biased towards keyframes. Between two consecutive keys `a < b` the bias
//! follows a kernel `w` with `w(a) = w(b) = 1` and `w((a + b) / 2) = 0`:
//!
//! * cosine: `w(t) = (1 + cos(2 * pi * min(t - a, b - t) / (b - a))) / 2`
//! * linear: `w(t) = 1 - 2 * min(t - a, b - t) / (b - a)`
//!
//! With flat score `f` and bias `B`, a sample scores `f * (1 + B * w)` when
//! keyframes are boosted and `f * (1 - B * (1 - w))` when other samples are
//! damped. Samples before the first key or after the last take `w = 1`.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{BiasMode, Interpolation, KeyframeRule, PartitionSet, ReducedEmbedding};

fn nearest_to_centroid(reduced: &ReducedEmbedding, start: usize, end: usize) -> usize {
    let dim = reduced.dim();
    let len = (end - start) as f64;
    let mut centroid = vec![0.0; dim];
    for i in start..end {
        for (c, v) in centroid.iter_mut().zip(reduced.data.row(i).iter()) {
            *c += v / len;
        }
    }
    let mut best = (start, f64::INFINITY);
    for i in start..end {
        let d: f64 = reduced
            .data
            .row(i)
            .iter()
            .zip(&centroid)
            .map(|(v, c)| (v - c) * (v - c))
            .sum();
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// Sorted, de-duplicated keyframe sample indices over all partitions.
pub fn keyframes(parts: &PartitionSet, reduced: &ReducedEmbedding, rule: KeyframeRule) -> Vec<usize> {
    let mut keys = BTreeSet::new();
    for p in &parts.partitions {
        let middle = p.start + p.len() / 2;
        match rule {
            KeyframeRule::Mean => {
                keys.insert(nearest_to_centroid(reduced, p.start, p.end));
            }
            KeyframeRule::Middle => {
                keys.insert(middle);
            }
            KeyframeRule::Ends => {
                keys.insert(p.start);
                keys.insert(p.end - 1);
            }
            KeyframeRule::MiddleEnds => {
                keys.extend([p.start, middle, p.end - 1]);
            }
        }
    }
    keys.into_iter().collect()
}

/// Each sample scores the length of its partition.
pub fn flat_scores(parts: &PartitionSet) -> Vec<f64> {
    parts
        .partitions
        .iter()
        .flat_map(|p| std::iter::repeat_n(p.len() as f64, p.len()))
        .collect()
}

/// Interpolation weight at `t` between keys `a < b`.
pub fn kernel_weight(interp: Interpolation, t: usize, a: usize, b: usize) -> f64 {
    let span = (b - a) as f64;
    let edge = (t - a).min(b - t) as f64;
    match interp {
        Interpolation::Cosine => (1.0 + (PI * 2.0 * edge / span).cos()) / 2.0,
        Interpolation::Linear => 1.0 - 2.0 * edge / span,
    }
}

pub fn biased_scores(
    flat: &[f64],
    keys: &[usize],
    interp: Interpolation,
    mode: BiasMode,
    bias: f64,
) -> Result<Vec<f64>> {
    if keys.is_empty() {
        return Err(Error::invariant("biased_scores", "at least one keyframe required"));
    }
    if !(0.0..=1.0).contains(&bias) {
        return Err(Error::config("bias", "bias out of range"));
    }
    if keys.windows(2).any(|w| w[0] >= w[1]) || keys[keys.len() - 1] >= flat.len() {
        return Err(Error::invariant("biased_scores", "keys must be sorted, unique and in range"));
    }

    let mut weights = vec![1.0; flat.len()];
    for pair in keys.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        for (t, w) in weights.iter_mut().enumerate().take(b).skip(a + 1) {
            *w = kernel_weight(interp, t, a, b);
        }
    }

    Ok(flat
        .iter()
        .zip(&weights)
        .map(|(&f, &w)| {
            let v = match mode {
                BiasMode::IncreaseKeyframes => f * (1.0 + bias * w),
                BiasMode::DecreaseOthers => f * (1.0 - bias * (1.0 - w)),
            };
            v.max(0.0)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Partition;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn parts(lengths: &[usize]) -> PartitionSet {
        let mut start = 0;
        PartitionSet {
            partitions: lengths
                .iter()
                .enumerate()
                .map(|(i, &l)| {
                    let p = Partition { start, end: start + l, label: i };
                    start += l;
                    p
                })
                .collect(),
        }
    }

    fn flat_embedding(n: usize) -> ReducedEmbedding {
        ReducedEmbedding {
            data: DMatrix::from_fn(n, 2, |i, j| (i * (j + 1)) as f64),
        }
    }

    #[test]
    fn middle_ends_on_single_partition() {
        let p = parts(&[5]);
        assert_eq!(keyframes(&p, &flat_embedding(5), KeyframeRule::MiddleEnds), vec![0, 2, 4]);
        assert_eq!(keyframes(&p, &flat_embedding(5), KeyframeRule::Ends), vec![0, 4]);
        assert_eq!(keyframes(&p, &flat_embedding(5), KeyframeRule::Middle), vec![2]);
    }

    #[test]
    fn unit_partition_gives_its_sample() {
        let p = parts(&[3, 1, 3]);
        let e = flat_embedding(7);
        for rule in [KeyframeRule::Mean, KeyframeRule::Middle, KeyframeRule::Ends, KeyframeRule::MiddleEnds] {
            assert!(keyframes(&p, &e, rule).contains(&3), "{rule:?}");
        }
    }

    #[test]
    fn mean_rule_picks_sample_at_centroid() {
        let data = DMatrix::from_row_slice(5, 2, &[0., 0., 4., 0., 1., 3., 2., 1., 3., 1.]);
        // centroid = (2, 1) = row 3
        let keys = keyframes(&parts(&[5]), &ReducedEmbedding { data }, KeyframeRule::Mean);
        assert_eq!(keys, vec![3]);
    }

    #[test]
    fn flat_scores_are_partition_lengths() {
        assert_eq!(flat_scores(&parts(&[4, 6])), vec![4., 4., 4., 4., 6., 6., 6., 6., 6., 6.]);
        assert_eq!(flat_scores(&parts(&[7])), vec![7.0; 7]);
        let v = flat_scores(&parts(&[1, 9]));
        assert_eq!(v[0], 1.0);
        assert!(v[1..].iter().all(|&x| x == 9.0));
    }

    #[test]
    fn zero_bias_is_identity() {
        let flat = flat_scores(&parts(&[3, 5, 2]));
        for interp in [Interpolation::Cosine, Interpolation::Linear] {
            for mode in [BiasMode::IncreaseKeyframes, BiasMode::DecreaseOthers] {
                assert_eq!(biased_scores(&flat, &[1, 5, 9], interp, mode, 0.0).unwrap(), flat);
            }
        }
    }

    #[test]
    fn cosine_between_two_ends() {
        let flat = vec![8.0; 8];
        let v = biased_scores(&flat, &[0, 7], Interpolation::Cosine, BiasMode::IncreaseKeyframes, 0.5).unwrap();
        assert_eq!(v[0], 12.0);
        assert_eq!(v[7], 12.0);
        for &x in &v[1..7] {
            assert!(x > 8.0 && x < 12.0, "{x}");
        }
        // Symmetric, decreasing towards the centre.
        for t in 1..4 {
            assert!((v[t] - v[7 - t]).abs() < 1e-12);
            assert!(v[t] < v[t - 1]);
        }
        // Trough next to the kernel zero at t = 3.5.
        let w3 = (1.0 + (PI * 6.0 / 7.0).cos()) / 2.0;
        assert!((v[3] - 8.0 * (1.0 + 0.5 * w3)).abs() < 1e-12);
    }

    #[test]
    fn linear_kernel_is_triangular() {
        let v = biased_scores(&[4.0; 5], &[0, 4], Interpolation::Linear, BiasMode::IncreaseKeyframes, 1.0).unwrap();
        assert_eq!(v, vec![8.0, 6.0, 4.0, 6.0, 8.0]);
        let v = biased_scores(&[4.0; 5], &[0, 4], Interpolation::Linear, BiasMode::DecreaseOthers, 0.5).unwrap();
        assert_eq!(v, vec![4.0, 3.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn every_sample_a_key() {
        let flat = flat_scores(&parts(&[2, 3]));
        let v = biased_scores(&flat, &[0, 1, 2, 3, 4], Interpolation::Cosine, BiasMode::IncreaseKeyframes, 0.5).unwrap();
        assert_eq!(v, flat.iter().map(|f| f * 1.5).collect::<Vec<_>>());
    }

    #[test]
    fn outside_keys_hold_the_key_value() {
        let v = biased_scores(&[6.0; 6], &[3], Interpolation::Cosine, BiasMode::IncreaseKeyframes, 0.5).unwrap();
        assert_eq!(v, vec![9.0; 6]);
    }

    #[test]
    fn empty_keys_rejected() {
        assert!(biased_scores(&[1.0], &[], Interpolation::Cosine, BiasMode::IncreaseKeyframes, 0.5).is_err());
    }

    fn arb_parts() -> impl Strategy<Value = PartitionSet> {
        proptest::collection::vec(1usize..20, 1..12).prop_map(|l| parts(&l))
    }

    proptest! {
        #[test]
        fn increase_dominates_and_decrease_is_dominated(
            p in arb_parts(),
            bias in 0.0f64..=1.0,
            rule in prop_oneof![Just(KeyframeRule::Middle), Just(KeyframeRule::Ends), Just(KeyframeRule::MiddleEnds)],
            interp in prop_oneof![Just(Interpolation::Cosine), Just(Interpolation::Linear)],
        ) {
            let n = p.num_samples();
            let flat = flat_scores(&p);
            let keys = keyframes(&p, &flat_embedding(n), rule);
            let up = biased_scores(&flat, &keys, interp, BiasMode::IncreaseKeyframes, bias).unwrap();
            let down = biased_scores(&flat, &keys, interp, BiasMode::DecreaseOthers, bias).unwrap();
            for i in 0..n {
                prop_assert!(up[i] >= flat[i] && down[i] <= flat[i]);
                prop_assert!(up[i].is_finite() && down[i] >= 0.0);
            }
            for &k in &keys {
                prop_assert_eq!(up[k], flat[k] * (1.0 + bias));
                prop_assert_eq!(down[k], flat[k]);
            }
            // Within each partition the maximum is attained at a key.
            for part in &p.partitions {
                let max = up[part.start..part.end].iter().cloned().fold(f64::MIN, f64::max);
                prop_assert!(keys.iter().any(|&k| part.start <= k && k < part.end && up[k] == max));
            }
        }
    }
}
