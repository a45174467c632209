//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

// `!(x < tol)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{blob_sequence, brute_force_knapsack, oracle_pca, random_matrix, random_runs};
use tacsum_cli::format::save_tacemb;
use tacsum_cli::{run, Cli};
use tacsum_core::evaluator::{knapsack_select, segment_values, Segment};
use tacsum_core::model::{
    BiasMode, Interpolation, KeyframeRule, Partition, PartitionSet, PipelineConfig, ReducedEmbedding, SampleMap,
};
use tacsum_core::nalgebra::DMatrix;
use tacsum_core::partitioner::{eliminate_outliers, refine_counted, smooth, to_partitions};
use tacsum_core::reducer::{conditional_affinities, effective_perplexity, pca_fit_transform, tsne, TsneParams};
use tacsum_core::scorer::{biased_scores, flat_scores, keyframes};
use tacsum_core::{sampler, summarize};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn random_segments(rng: &mut ChaCha8Rng, count: usize, max_len: usize) -> Vec<Segment> {
    let mut at = 0;
    (0..count)
        .map(|_| {
            let len = rng.random_range(1..=max_len);
            at += len;
            (at - len, at)
        })
        .collect()
}

fn knapsack_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let started = Instant::now();
    for case in 0..500 {
        let count = rng.random_range(1..=12);
        let segments = random_segments(&mut rng, count, 40);
        let total = segments.last().unwrap().1;
        let scores: Vec<f64> = (0..total).map(|_| rng.random()).collect();
        let budget = (rng.random_range(0.05..0.6) * total as f64).floor() as usize;
        let chosen = knapsack_select(&segments, &scores, budget).map_err(|e| e.to_string())?;
        let values = segment_values(&segments, &scores);
        let weights: Vec<usize> = segments.iter().map(|(s, e)| e - s).collect();
        let got: f64 = chosen.iter().map(|&i| values[i]).sum();
        let used: usize = chosen.iter().map(|&i| weights[i]).sum();
        let best = brute_force_knapsack(&weights, &values, budget);
        if used > budget || got != best {
            return Err(format!("case {case}: value {got} weight {used}/{budget}, optimum {best}"));
        }
    }
    let secs = started.elapsed().as_secs_f64();
    if secs >= 10.0 {
        return Err(format!("500 instances took {secs:.2} s"));
    }
    Ok(format!("500 instances equal the exhaustive optimum in {secs:.3} s"))
}

fn pca_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let d = rng.random_range(1..=20);
        let n = rng.random_range(2..=100);
        let k = rng.random_range(1..=d.min(n - 1));
        let x = random_matrix(&mut rng, n, d);
        let (_, ours) = pca_fit_transform(&x, k).map_err(|e| e.to_string())?;
        let err = (&ours - &oracle_pca(&x, k)).amax();
        if !(err < 1e-6) {
            return Err(format!("case {case} ({n}x{d}, k={k}): max deviation {err:e}"));
        }
        worst = worst.max(err);
    }
    Ok(format!("100 matrices, max deviation {worst:.1e}"))
}

fn tsne_descent() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(300);
    let mut worst_entropy = 0.0f64;
    let mut worst_ratio = 0.0f64;
    for case in 0..20 {
        let n = rng.random_range(40..=160);
        let d = rng.random_range(3..=30);
        let groups = rng.random_range(1..=5);
        let centres = random_matrix(&mut rng, groups, d) * 4.0;
        let noise = random_matrix(&mut rng, n, d);
        let x = DMatrix::from_fn(n, d, |i, j| centres[(i % groups, j)] + noise[(i, j)]);

        let perp = effective_perplexity(n, 30.0);
        let aff = conditional_affinities(&x, perp).map_err(|e| e.to_string())?;
        for (i, h) in aff.entropies_bits.iter().enumerate() {
            let err = (h - aff.target_bits).abs();
            if !(err < 1e-4) {
                return Err(format!("dataset {case}: point {i} entropy error {err:e}"));
            }
            worst_entropy = worst_entropy.max(err);
        }

        let out = tsne(&x, &TsneParams { seed: case, ..TsneParams::default() }).map_err(|e| e.to_string())?;
        let (k300, k1000) = (out.kl_at(300).unwrap(), out.kl_at(1000).unwrap());
        if !(k1000 < k300) {
            return Err(format!("dataset {case}: KL(1000) = {k1000} >= KL(300) = {k300}"));
        }
        worst_ratio = worst_ratio.max(k1000 / k300);
    }
    Ok(format!(
        "20 datasets, max KL(1000)/KL(300) {worst_ratio:.3}, max entropy error {worst_entropy:.1e} bits"
    ))
}

fn refinement_fuzz() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(400);
    for case in 0..1000 {
        let n = rng.random_range(1..=300);
        let k = rng.random_range(1..=12);
        let max_run = rng.random_range(1..=15);
        let labels = random_runs(&mut rng, n, k, max_run);
        let window = [1, 3, 5, 7][rng.random_range(0..4)];
        let min_len = rng.random_range(1..=8);
        let raw = to_partitions(&smooth(&eliminate_outliers(&labels), window));
        let before = raw.len();
        let (refined, iterations) = refine_counted(&raw, min_len);
        refined.check(n).map_err(|e| format!("case {case}: {e}"))?;
        if refined.len() > 1 && refined.partitions.iter().any(|p| p.len() < min_len) {
            return Err(format!("case {case}: partition shorter than {min_len}"));
        }
        if iterations > before.saturating_sub(1) {
            return Err(format!("case {case}: {iterations} iterations for {before} partitions"));
        }
    }
    Ok("1000 label sequences: coverage, min length and iteration bound hold".into())
}

fn synthetic_end_to_end() -> Outcome {
    let mut worst = 0usize;
    for seed in 0..20u64 {
        let config = PipelineConfig { seed, ..PipelineConfig::default() };
        let set = blob_sequence(3, 100, 64, 10.0, seed);
        let out = summarize(&set, &config).map_err(|e| e.to_string())?;
        let parts = &out.partitions.partitions;
        if parts.len() != 3 {
            return Err(format!("seed {seed}: {} partitions", parts.len()));
        }
        for (p, truth) in parts[1..].iter().zip([100usize, 200]) {
            let off = p.start.abs_diff(truth);
            if off > config.window / 2 {
                return Err(format!("seed {seed}: boundary {} vs {truth}", p.start));
            }
            worst = worst.max(off);
        }
    }
    Ok(format!("20 seeds give 3 partitions, max boundary offset {worst}"))
}

fn random_partitions(rng: &mut ChaCha8Rng) -> PartitionSet {
    let count = rng.random_range(1..=10);
    let mut at = 0;
    let partitions = (0..count)
        .map(|label| {
            let len = rng.random_range(1..=25);
            at += len;
            Partition { start: at - len, end: at, label }
        })
        .collect();
    PartitionSet { partitions }
}

fn random_reduced(rng: &mut ChaCha8Rng, n: usize) -> ReducedEmbedding {
    ReducedEmbedding { data: DMatrix::from_fn(n, 2, |_, _| rng.random_range(-1.0..1.0)) }
}

const RULES: [KeyframeRule; 4] = [KeyframeRule::Mean, KeyframeRule::Middle, KeyframeRule::Ends, KeyframeRule::MiddleEnds];
const INTERPS: [Interpolation; 2] = [Interpolation::Cosine, Interpolation::Linear];

fn is_peak(v: &[f64], i: usize) -> bool {
    (i == 0 || v[i] >= v[i - 1]) && (i + 1 == v.len() || v[i] >= v[i + 1])
}

fn scorer_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let lambdas = [1e-6, 0.01, 0.5, 3.0, 1e3, 1e6];
    for case in 0..300 {
        let parts = random_partitions(&mut rng);
        let n = parts.num_samples();
        let reduced = random_reduced(&mut rng, n);
        let flat = flat_scores(&parts);
        for rule in RULES {
            let keys = keyframes(&parts, &reduced, rule);
            for interp in INTERPS {
                for mode in [BiasMode::IncreaseKeyframes, BiasMode::DecreaseOthers] {
                    let v = biased_scores(&flat, &keys, interp, mode, 0.0).map_err(|e| e.to_string())?;
                    if v != flat {
                        return Err(format!("case {case}: B = 0 changed scores ({rule:?}, {interp:?}, {mode:?})"));
                    }
                }
            }
        }

        // Peaks are checked for the rules that key every partition end.
        let bias = rng.random_range(0.01..=1.0);
        for rule in [KeyframeRule::MiddleEnds, KeyframeRule::Ends] {
            let keys = keyframes(&parts, &reduced, rule);
            for interp in INTERPS {
                let v = biased_scores(&flat, &keys, interp, BiasMode::IncreaseKeyframes, bias)
                    .map_err(|e| e.to_string())?;
                if let Some(i) = (0..n).find(|&i| is_peak(&v, i) && keys.binary_search(&i).is_err()) {
                    return Err(format!("case {case}: peak at non-key sample {i} ({rule:?}, {interp:?})"));
                }
            }
        }

        // Scaling: frame scores from the scorer, expanded over a random sample map.
        let keys = keyframes(&parts, &reduced, KeyframeRule::MiddleEnds);
        let sample_scores = biased_scores(&flat, &keys, Interpolation::Cosine, BiasMode::IncreaseKeyframes, bias)
            .map_err(|e| e.to_string())?;
        let mut at = 0u64;
        let indices: Vec<u64> = (0..n)
            .map(|_| {
                at += rng.random_range(1..=8);
                at - 1
            })
            .collect();
        let total = at + rng.random_range(0..8);
        let map = SampleMap { sample_indices: indices, rate: 4.0 };
        let frames = sampler::expand(&map, &sample_scores, total).map_err(|e| e.to_string())?;
        let mut segments = Vec::new();
        let mut s = 0usize;
        while s < frames.len() {
            let e = (s + rng.random_range(1..=12)).min(frames.len());
            segments.push((s, e));
            s = e;
        }
        let budget = (0.15 * frames.len() as f64).floor() as usize;
        let base = knapsack_select(&segments, &frames, budget).map_err(|e| e.to_string())?;
        for lambda in lambdas {
            let scaled: Vec<f64> = frames.iter().map(|f| f * lambda).collect();
            let got = knapsack_select(&segments, &scaled, budget).map_err(|e| e.to_string())?;
            if got != base {
                return Err(format!("case {case}: lambda {lambda} changed the selection"));
            }
        }
    }
    Ok("300 cases: B = 0 identity, peaks at keys, selection invariant under 6 scalings".into())
}

fn summarize_bytes(path: &str, seed: &str) -> Result<Vec<u8>, String> {
    let cli = Cli::try_parse_from(["tacsum", "summarize", path, "--seed", seed]).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    run(cli, &mut out).map_err(|e| e.to_string())?;
    Ok(out)
}

fn determinism() -> Outcome {
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let path = dir.path().join("video.tacemb");
    save_tacemb(&path, &blob_sequence(3, 60, 48, 8.0, 42)).map_err(|e| e.to_string())?;
    let path = path.to_str().unwrap();
    let first = summarize_bytes(path, "42")?;
    let second = summarize_bytes(path, "42")?;
    if first != second {
        return Err("two runs with seed 42 differ".into());
    }
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| e.to_string())?
        .install(|| summarize_bytes(path, "42"))?;
    if single != first {
        return Err("single-threaded run differs".into());
    }
    Ok(format!("{} identical bytes across runs and thread counts", first.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("knapsack oracle equivalence", knapsack_oracle),
        ("PCA oracle", pca_oracle),
        ("t-SNE descent and bandwidth search", tsne_descent),
        ("partition refinement fuzz", refinement_fuzz),
        ("synthetic end-to-end", synthetic_end_to_end),
        ("scorer properties", scorer_properties),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let outcome = check();
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
