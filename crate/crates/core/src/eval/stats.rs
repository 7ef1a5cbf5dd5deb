use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Sample sizes up to this use the exact signed-rank distribution.
pub const WILCOXON_EXACT_MAX: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McNemar {
    pub statistic: f64,
    pub p_value: f64,
    /// Pairs where only the first system is correct.
    pub only_first: usize,
    /// Pairs where only the second system is correct.
    pub only_second: usize,
}

/// Continuity-corrected McNemar test on paired correctness.
pub fn mcnemar(first: &[bool], second: &[bool]) -> Result<McNemar> {
    if first.len() != second.len() {
        return Err(Error::Contract("mcnemar: unpaired samples".into()));
    }
    let b = first.iter().zip(second).filter(|(x, y)| **x && !**y).count();
    let c = first.iter().zip(second).filter(|(x, y)| !**x && **y).count();
    Ok(mcnemar_counts(b, c))
}

/// McNemar from the discordant counts.
pub fn mcnemar_counts(b: usize, c: usize) -> McNemar {
    let (statistic, p_value) = if b + c == 0 {
        (0.0, 1.0)
    } else {
        let d = (b as f64 - c as f64).abs() - 1.0;
        let stat = d * d / (b + c) as f64;
        let chi = ChiSquared::new(1.0).expect("one degree of freedom");
        (stat, (1.0 - chi.cdf(stat)).clamp(0.0, 1.0))
    };
    McNemar {
        statistic,
        p_value,
        only_first: b,
        only_second: c,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wilcoxon {
    /// Sum of ranks of positive differences.
    pub statistic: f64,
    pub p_value: f64,
    /// Non-zero differences.
    pub n: usize,
    pub exact: bool,
    /// Every difference was zero; `p_value` is 1.
    pub all_zero: bool,
}

/// Average ranks (1-based) of `values` sorted ascending, plus tie group sizes.
fn average_ranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
/// are dropped and tied magnitudes get average ranks.
pub fn wilcoxon(first: &[f64], second: &[f64]) -> Result<Wilcoxon> {
    if first.len() != second.len() {
        return Err(Error::Contract("wilcoxon: unpaired samples".into()));
    }
    let diffs: Vec<f64> = first.iter().zip(second).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(Wilcoxon {
            statistic: 0.0,
            p_value: 1.0,
            n: 0,
            exact: true,
            all_zero: true,
        });
    }
    let mags: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = average_ranks(&mags);
    let w_plus: f64 = ranks.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
    let p_value = if n <= WILCOXON_EXACT_MAX {
        exact_p(&ranks, w_plus)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
        if var <= 0.0 {
            1.0
        } else {
            let z = (w_plus - mean) / var.sqrt();
            let normal = Normal::new(0.0, 1.0).expect("standard normal");
            (2.0 * (1.0 - normal.cdf(z.abs()))).clamp(0.0, 1.0)
        }
    };
    Ok(Wilcoxon {
        statistic: w_plus,
        p_value,
        n,
        exact: n <= WILCOXON_EXACT_MAX,
        all_zero: false,
    })
}

/// Exact two-sided p by counting sign assignments over doubled (integer) ranks.
fn exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; max + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=max).rev() {
            counts[s] += counts[s - r];
        }
    }
    let total: f64 = counts.iter().sum();
    let obs = (w_plus * 2.0).round() as usize;
    let lower: f64 = counts[..=obs].iter().sum::<f64>() / total;
    let upper: f64 = counts[obs..].iter().sum::<f64>() / total;
    (2.0 * lower.min(upper)).min(1.0)
}

/// `min(1, p · m)` for each p.
pub fn bonferroni(p_values: &[f64], m: usize) -> Result<Vec<f64>> {
    if m < p_values.len() || m == 0 {
        return Err(Error::Contract(format!(
            "bonferroni: m = {m} is smaller than the {} comparisons",
            p_values.len()
        )));
    }
    Ok(p_values.iter().map(|p| (p * m as f64).min(1.0)).collect())
}
