use rand::Rng;

use super::bleu::{segment_stats, BleuStats, MAX_N};
use crate::error::{Error, Result};
use crate::par::{map_range, Execution};
use crate::tensor::RngState;

/// Iterations per parallel work unit; each unit owns a derived RNG stream so
/// results do not depend on the thread count.
const CHUNK: usize = 250;
pub const MIN_ITERATIONS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BleuSignificance {
    /// `BLEU(A) − BLEU(B)` on the real assignment.
    pub delta: f64,
    /// Approximate-randomization p-value.
    pub p_value: f64,
    /// 95% bootstrap percentile interval on the delta.
    pub ci_low: f64,
    pub ci_high: f64,
    pub iterations: usize,
}

fn corpus_delta(a: &[BleuStats], b: &[BleuStats], pick: impl Fn(usize) -> (usize, bool)) -> f64 {
    let mut sa = BleuStats::default();
    let mut sb = BleuStats::default();
    for k in 0..a.len() {
        let (i, swap) = pick(k);
        let (x, y) = if swap { (&b[i], &a[i]) } else { (&a[i], &b[i]) };
        sa.add(x);
        sb.add(y);
    }
    sa.score(MAX_N) - sb.score(MAX_N)
}

/// Paired per-text BLEU statistics of two systems against shared references.
pub fn paired_stats<A: AsRef<str>, B: AsRef<str>, R: AsRef<str>>(
    cand_a: &[Vec<A>],
    cand_b: &[Vec<B>],
    references: &[Vec<Vec<R>>],
) -> Result<(Vec<BleuStats>, Vec<BleuStats>)> {
    Ok((
        segment_stats(cand_a, references, MAX_N)?,
        segment_stats(cand_b, references, MAX_N)?,
    ))
}

/// Approximate randomization over text-level system swaps, with a bootstrap
/// interval on the BLEU difference.
pub fn bleu_significance<A: AsRef<str>, B: AsRef<str>, R: AsRef<str>>(
    cand_a: &[Vec<A>],
    cand_b: &[Vec<B>],
    references: &[Vec<Vec<R>>],
    iterations: usize,
    seed: u64,
    exec: Execution,
) -> Result<BleuSignificance> {
    let (a, b) = paired_stats(cand_a, cand_b, references)?;
    significance_from_stats(&a, &b, iterations, seed, exec)
}

pub fn significance_from_stats(
    a: &[BleuStats],
    b: &[BleuStats],
    iterations: usize,
    seed: u64,
    exec: Execution,
) -> Result<BleuSignificance> {
    if iterations < MIN_ITERATIONS {
        return Err(Error::Config(format!("at least {MIN_ITERATIONS} iterations required")));
    }
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Contract("bleu significance needs equal, non-empty corpora".into()));
    }
    let n = a.len();
    let observed = corpus_delta(a, b, |i| (i, false));
    let chunks = iterations.div_ceil(CHUNK);
    let chunk_len = |c: usize| CHUNK.min(iterations - c * CHUNK);
    let tol = 1e-9;

    let hits: usize = map_range(exec, chunks, |c| {
        let mut rng = RngState::derive(seed, &[0xA5, c as u64]);
        (0..chunk_len(c))
            .filter(|_| {
                let swaps: Vec<bool> = (0..n).map(|_| rng.gen::<bool>()).collect();
                corpus_delta(a, b, |i| (i, swaps[i])).abs() + tol >= observed.abs()
            })
            .count()
    })
    .into_iter()
    .sum();

    let mut boot: Vec<f64> = map_range(exec, chunks, |c| {
        let mut rng = RngState::derive(seed, &[0xB0, c as u64]);
        (0..chunk_len(c))
            .map(|_| {
                let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                corpus_delta(a, b, |k| (idx[k], false))
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    boot.sort_by(f64::total_cmp);
    let at = |q: f64| boot[((q * (boot.len() - 1) as f64).round() as usize).min(boot.len() - 1)];

    Ok(BleuSignificance {
        delta: observed,
        p_value: (hits + 1) as f64 / (iterations + 1) as f64,
        ci_low: at(0.025),
        ci_high: at(0.975),
        iterations,
    })
}
