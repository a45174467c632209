//! Summary evaluation against user annotations.
//!
//! Frame scores are turned into a segment selection with a 0/1 knapsack
//! (weight = segment length in frames, value = mean frame score, capacity =
//! `floor(budget * T)`), and the resulting frame mask is scored against each
//! user summary with the f1 measure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{UserAggregation, VideoMeta};

/// Relative slack under which two knapsack values count as tied.
const TIE_REL_TOL: f64 = 1e-12;

/// Half-open frame range `[start, end)`.
pub type Segment = (usize, usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedVideo {
    pub video_id: String,
    pub meta: VideoMeta,
    pub change_points: Vec<Segment>,
    /// One 0/1 vector of length `T` per annotator.
    pub user_summaries: Vec<Vec<u8>>,
    pub gt_scores: Option<Vec<f64>>,
}

impl AnnotatedVideo {
    pub fn num_frames(&self) -> usize {
        self.meta.total_frames as usize
    }

    pub fn check(&self) -> Result<()> {
        self.meta.check()?;
        let t = self.num_frames();
        check_segments(&self.change_points, t)?;
        if self.user_summaries.is_empty() {
            return Err(Error::invariant("AnnotatedVideo", "at least one user summary required"));
        }
        for (u, s) in self.user_summaries.iter().enumerate() {
            if s.len() != t {
                return Err(Error::invariant(
                    "AnnotatedVideo",
                    format!("user summary {u} has length {}, expected {t}", s.len()),
                ));
            }
            if s.iter().any(|&b| b > 1) {
                return Err(Error::invariant("AnnotatedVideo", format!("user summary {u} is not binary")));
            }
        }
        if let Some(gt) = &self.gt_scores {
            if gt.len() != t {
                return Err(Error::invariant("AnnotatedVideo", "gt_scores length differs from n_frames"));
            }
        }
        Ok(())
    }

    pub fn user_masks(&self) -> Vec<Vec<bool>> {
        self.user_summaries
            .iter()
            .map(|s| s.iter().map(|&b| b == 1).collect())
            .collect()
    }

    pub fn budget_frames(&self, fraction: f64) -> usize {
        (fraction * self.num_frames() as f64).floor() as usize
    }
}

/// Checks that `segments` tile `[0, total)` in order.
pub fn check_segments(segments: &[Segment], total: usize) -> Result<()> {
    let mut at = 0;
    for &(s, e) in segments {
        if s != at || e <= s {
            return Err(Error::invariant(
                "change points",
                format!("segment [{s}, {e}) does not continue at frame {at}"),
            ));
        }
        at = e;
    }
    if at != total {
        return Err(Error::invariant(
            "change points",
            format!("segments cover {at} frames, expected {total}"),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub per_user_f1: Vec<f64>,
    pub f_measure: f64,
    pub selected_segments: Vec<usize>,
    pub summary_mask: Vec<u8>,
}

/// Exact 0/1 knapsack. Returns the sorted indices of the chosen items.
///
/// On ties the backtrack leaves out the highest-index item.
pub fn knapsack_01(weights: &[usize], values: &[f64], capacity: usize) -> Vec<usize> {
    let n = weights.len();
    let width = capacity + 1;
    let mut best = vec![0.0f64; width];
    let mut take = vec![false; n * width];
    for i in 0..n {
        let w = weights[i];
        if w > capacity {
            continue;
        }
        for c in (w..=capacity).rev() {
            let include = best[c - w] + values[i];
            let exclude = best[c];
            if include > exclude + TIE_REL_TOL * include.abs().max(exclude.abs()) {
                best[c] = include;
                take[i * width + c] = true;
            }
        }
    }
    let mut chosen = Vec::new();
    let mut c = capacity;
    for i in (0..n).rev() {
        if take[i * width + c] {
            chosen.push(i);
            c -= weights[i];
        }
    }
    chosen.reverse();
    chosen
}

/// Mean frame score of each segment.
pub fn segment_values(segments: &[Segment], frame_scores: &[f64]) -> Vec<f64> {
    segments
        .iter()
        .map(|&(s, e)| frame_scores[s..e].iter().sum::<f64>() / (e - s) as f64)
        .collect()
}

pub fn knapsack_select(segments: &[Segment], frame_scores: &[f64], budget_frames: usize) -> Result<Vec<usize>> {
    check_segments(segments, frame_scores.len())?;
    let weights: Vec<usize> = segments.iter().map(|&(s, e)| e - s).collect();
    let values = segment_values(segments, frame_scores);
    Ok(knapsack_01(&weights, &values, budget_frames))
}

pub fn selection_mask(segments: &[Segment], selected: &[usize], total: usize) -> Vec<bool> {
    let mut mask = vec![false; total];
    for &i in selected {
        let (s, e) = segments[i];
        mask[s..e].iter_mut().for_each(|m| *m = true);
    }
    mask
}

#[derive(Debug, Clone, PartialEq)]
pub struct FScore {
    pub per_user_f1: Vec<f64>,
    pub f_measure: f64,
}

/// Frame-level f1 of `mask` against one user summary.
pub fn f1(mask: &[bool], user: &[bool]) -> f64 {
    let overlap = mask.iter().zip(user).filter(|(m, u)| **m && **u).count() as f64;
    let selected = mask.iter().filter(|m| **m).count() as f64;
    let relevant = user.iter().filter(|u| **u).count() as f64;
    let precision = if selected > 0.0 { overlap / selected } else { 0.0 };
    let recall = if relevant > 0.0 { overlap / relevant } else { 0.0 };
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn f_measure(mask: &[bool], users: &[Vec<bool>], aggregation: UserAggregation) -> Result<FScore> {
    if users.is_empty() {
        return Err(Error::invariant("f_measure", "no user summaries"));
    }
    if let Some(u) = users.iter().find(|u| u.len() != mask.len()) {
        return Err(Error::Length {
            what: "user summary",
            expected: mask.len(),
            actual: u.len(),
        });
    }
    let per_user_f1: Vec<f64> = users.iter().map(|u| f1(mask, u)).collect();
    let f_measure = match aggregation {
        UserAggregation::Max => per_user_f1.iter().cloned().fold(0.0, f64::max),
        UserAggregation::Mean => per_user_f1.iter().sum::<f64>() / per_user_f1.len() as f64,
    };
    Ok(FScore { per_user_f1, f_measure })
}

/// Knapsack summary from `frame_scores`, scored against the video's users.
pub fn evaluate_scores(
    video: &AnnotatedVideo,
    frame_scores: &[f64],
    budget_fraction: f64,
    aggregation: UserAggregation,
) -> Result<EvalResult> {
    if frame_scores.len() != video.num_frames() {
        return Err(Error::Length {
            what: "frame scores",
            expected: video.num_frames(),
            actual: frame_scores.len(),
        });
    }
    let selected = knapsack_select(&video.change_points, frame_scores, video.budget_frames(budget_fraction))?;
    let mask = selection_mask(&video.change_points, &selected, video.num_frames());
    let score = f_measure(&mask, &video.user_masks(), aggregation)?;
    Ok(EvalResult {
        per_user_f1: score.per_user_f1,
        f_measure: score.f_measure,
        selected_segments: selected,
        summary_mask: mask.into_iter().map(u8::from).collect(),
    })
}

/// Mean f-measure of summaries built from i.i.d. uniform frame scores.
pub fn random_baseline(
    video: &AnnotatedVideo,
    budget_fraction: f64,
    runs: usize,
    seed: u64,
    aggregation: UserAggregation,
) -> Result<f64> {
    if runs == 0 {
        return Err(Error::config("runs", "at least one run required"));
    }
    video.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    let mut scores = vec![0.0; video.num_frames()];
    for _ in 0..runs {
        scores.iter_mut().for_each(|s| *s = rng.random::<f64>());
        total += evaluate_scores(video, &scores, budget_fraction, aggregation)?.f_measure;
    }
    Ok(total / runs as f64)
}
