use crate::corpus::{classify_form, Form};
use crate::error::{Error, Result};

fn check_lengths(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::Contract(format!("{what}: {a} predictions for {b} references")));
    }
    Ok(())
}

fn lower<T: AsRef<str>>(tokens: &[T]) -> Vec<String> {
    tokens.iter().map(|t| t.as_ref().to_lowercase()).collect()
}

/// Case-insensitive token-sequence equality.
pub fn same_refex<A: AsRef<str>, B: AsRef<str>>(a: &[A], b: &[B]) -> bool {
    lower(a) == lower(b)
}

/// Fraction of exact matches on lowercased token sequences.
pub fn accuracy<A: AsRef<str>, B: AsRef<str>>(preds: &[Vec<A>], golds: &[Vec<B>]) -> Result<f64> {
    check_lengths(preds.len(), golds.len(), "accuracy")?;
    if preds.is_empty() {
        return Ok(0.0);
    }
    let hits = preds.iter().zip(golds).filter(|(p, g)| same_refex(p, g)).count();
    Ok(hits as f64 / preds.len() as f64)
}

/// Levenshtein distance over Unicode scalar values.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein(&a, &b)
}

/// Levenshtein distance over whole tokens.
pub fn token_edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    levenshtein(a, b)
}

fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = (up + 1).min(row[j] + 1).min(diag + usize::from(x != y));
            diag = up;
        }
    }
    row[b.len()]
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PronounMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub gold_pronouns: usize,
    pub predicted_pronouns: usize,
    pub true_positives: usize,
    /// Set when a zero denominator forced a value to 0.
    pub undefined: bool,
}

fn ratio(num: usize, den: usize, undefined: &mut bool) -> f64 {
    if den == 0 {
        *undefined = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Pronoun-class scores. Accuracy is exact-match accuracy over instances
/// whose gold is a pronoun; precision, recall and F1 treat "form is pronoun"
/// as the positive class.
pub fn pronoun_metrics<A: AsRef<str>, B: AsRef<str>>(preds: &[Vec<A>], golds: &[Vec<B>]) -> Result<PronounMetrics> {
    check_lengths(preds.len(), golds.len(), "pronoun_metrics")?;
    let mut m = PronounMetrics::default();
    let mut exact = 0;
    for (p, g) in preds.iter().zip(golds) {
        let gold_pron = classify_form(g) == Form::Pronoun;
        let pred_pron = classify_form(p) == Form::Pronoun;
        m.gold_pronouns += usize::from(gold_pron);
        m.predicted_pronouns += usize::from(pred_pron);
        m.true_positives += usize::from(gold_pron && pred_pron);
        exact += usize::from(gold_pron && same_refex(p, g));
    }
    let mut undefined = false;
    m.accuracy = ratio(exact, m.gold_pronouns, &mut undefined);
    m.precision = ratio(m.true_positives, m.predicted_pronouns, &mut undefined);
    m.recall = ratio(m.true_positives, m.gold_pronouns, &mut undefined);
    m.f1 = if m.precision + m.recall > 0.0 {
        2.0 * m.precision * m.recall / (m.precision + m.recall)
    } else {
        undefined = true;
        0.0
    };
    m.undefined = undefined;
    Ok(m)
}
