use std::collections::HashMap;

use crate::error::{Error, Result};

pub const MAX_N: usize = 4;

/// Sufficient statistics of corpus BLEU. Segment statistics add up to the
/// corpus statistics, which is what the randomization tests exploit.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: [u64; MAX_N],
    pub totals: [u64; MAX_N],
    pub candidate_len: u64,
    pub reference_len: u64,
}

fn ngram_counts<T: AsRef<str>>(tokens: &[T], n: usize) -> HashMap<Vec<&str>, u64> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w.iter().map(AsRef::as_ref).collect()).or_default() += 1;
        }
    }
    counts
}

impl BleuStats {
    /// Clipped n-gram matches of one candidate against its references. The
    /// reference length is the one closest to the candidate, shorter on ties.
    pub fn segment<A: AsRef<str>, B: AsRef<str>>(candidate: &[A], references: &[Vec<B>], max_n: usize) -> Result<Self> {
        if references.is_empty() {
            return Err(Error::Contract("candidate without a reference".into()));
        }
        if !(1..=MAX_N).contains(&max_n) {
            return Err(Error::Config(format!("max_n must be in 1..={MAX_N}")));
        }
        let mut s = BleuStats {
            candidate_len: candidate.len() as u64,
            ..Default::default()
        };
        s.reference_len = references
            .iter()
            .map(|r| r.len() as u64)
            .min_by_key(|&l| (l.abs_diff(s.candidate_len), l))
            .expect("non-empty references");
        for n in 1..=max_n {
            let cand = ngram_counts(candidate, n);
            let mut max_ref: HashMap<Vec<&str>, u64> = HashMap::new();
            for r in references {
                for (g, c) in ngram_counts(r, n) {
                    let e = max_ref.entry(g).or_default();
                    *e = (*e).max(c);
                }
            }
            s.totals[n - 1] = cand.values().sum();
            s.matches[n - 1] = cand
                .iter()
                .map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0)))
                .sum();
        }
        Ok(s)
    }

    pub fn add(&mut self, other: &BleuStats) {
        for n in 0..MAX_N {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.candidate_len += other.candidate_len;
        self.reference_len += other.reference_len;
    }

    /// Modified precision for order `n` (1-based); 0 when there are no
    /// candidate n-grams.
    pub fn precision(&self, n: usize) -> f64 {
        match self.totals[n - 1] {
            0 => 0.0,
            t => self.matches[n - 1] as f64 / t as f64,
        }
    }

    pub fn brevity_penalty(&self) -> f64 {
        if self.candidate_len == 0 {
            0.0
        } else if self.candidate_len >= self.reference_len {
            1.0
        } else {
            (1.0 - self.reference_len as f64 / self.candidate_len as f64).exp()
        }
    }

    /// BLEU in `[0, 100]` using orders `1..=max_n`, unsmoothed.
    pub fn score(&self, max_n: usize) -> f64 {
        let mut log_sum = 0.0;
        for n in 1..=max_n {
            let p = self.precision(n);
            if p == 0.0 {
                return 0.0;
            }
            log_sum += p.ln();
        }
        100.0 * self.brevity_penalty() * (log_sum / max_n as f64).exp()
    }
}

/// Statistics for every segment of an aligned corpus.
pub fn segment_stats<A: AsRef<str>, B: AsRef<str>>(
    candidates: &[Vec<A>],
    references: &[Vec<Vec<B>>],
    max_n: usize,
) -> Result<Vec<BleuStats>> {
    if candidates.len() != references.len() {
        return Err(Error::Contract(format!(
            "bleu: {} candidates for {} reference sets",
            candidates.len(),
            references.len()
        )));
    }
    if candidates.is_empty() {
        return Err(Error::Contract("bleu over an empty corpus".into()));
    }
    candidates
        .iter()
        .zip(references)
        .map(|(c, r)| BleuStats::segment(c, r, max_n))
        .collect()
}

/// Corpus-level BLEU.
pub fn bleu<A: AsRef<str>, B: AsRef<str>>(candidates: &[Vec<A>], references: &[Vec<Vec<B>>], max_n: usize) -> Result<f64> {
    let mut total = BleuStats::default();
    for s in segment_stats(candidates, references, max_n)? {
        total.add(&s);
    }
    Ok(total.score(max_n))
}
