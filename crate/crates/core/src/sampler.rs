//! Snippet-based frame sampling and the inverse expansion back to frames.
//!
//! Each second of video is cut into `round(R)` contiguous snippets whose
//! lengths differ by at most one (longer snippets first) and the middle frame
//! of every snippet becomes a sample. A trailing partial second gets
//! `max(1, round(R * fraction))` snippets under the same rule.

use crate::error::{Error, Result};
use crate::model::{SampleMap, VideoMeta};

/// Frame index where second `s` begins, floored for non-integer fps.
fn second_start(s: u64, fps: f64, total: u64) -> u64 {
    ((s as f64 * fps).floor() as u64).min(total)
}

/// Pushes the representative frame of each of `n` snippets over `[start, start + len)`.
fn push_snippet_middles(out: &mut Vec<u64>, start: u64, len: u64, n: u64) {
    let n = n.max(1);
    let base = len / n;
    let rem = len % n;
    let mut at = start;
    for i in 0..n {
        let l = base + u64::from(i < rem);
        if l == 0 {
            continue;
        }
        out.push(at + l / 2);
        at += l;
    }
}

pub fn sample_indices(meta: &VideoMeta, rate: f64) -> Result<SampleMap> {
    meta.check()?;
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::config("rate", "rate must be > 0"));
    }
    let total = meta.total_frames;
    if meta.fps <= rate {
        return Ok(SampleMap {
            sample_indices: (0..total).collect(),
            rate,
        });
    }

    let per_second = rate.round().max(1.0) as u64;
    let mut indices = Vec::new();
    let mut s = 0u64;
    loop {
        let start = second_start(s, meta.fps, total);
        if start >= total {
            break;
        }
        let end_unclipped = ((s + 1) as f64 * meta.fps).floor() as u64;
        if end_unclipped <= total {
            push_snippet_middles(&mut indices, start, end_unclipped - start, per_second);
        } else {
            let len = total - start;
            let frac = len as f64 / meta.fps;
            let n = ((rate * frac).round() as u64).max(1);
            push_snippet_middles(&mut indices, start, len, n);
            break;
        }
        s += 1;
    }
    Ok(SampleMap {
        sample_indices: indices,
        rate,
    })
}

/// Spreads per-sample values over all `total_frames` frames. Each frame takes
/// the value of its nearest sample; equidistant frames go to the earlier one.
pub fn expand(map: &SampleMap, sample_values: &[f64], total_frames: u64) -> Result<Vec<f64>> {
    if sample_values.len() != map.len() {
        return Err(Error::Length {
            what: "expand sample values",
            expected: map.len(),
            actual: sample_values.len(),
        });
    }
    if map.is_empty() {
        return Err(Error::invariant("SampleMap", "at least one sample required"));
    }
    let idx = &map.sample_indices;
    let mut out = Vec::with_capacity(total_frames as usize);
    let mut cur = 0usize;
    for f in 0..total_frames {
        // Advance while the next sample is strictly closer.
        while cur + 1 < idx.len() && idx[cur + 1].abs_diff(f) < idx[cur].abs_diff(f) {
            cur += 1;
        }
        out.push(sample_values[cur]);
    }
    Ok(out)
}
