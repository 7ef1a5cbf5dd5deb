use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use super::bleu::{bleu, MAX_N};
use super::metrics::{edit_distance, pronoun_metrics, same_refex, PronounMetrics};
use super::relex::relexicalize_text;
use super::significance::significance_from_stats;
use super::stats::{bonferroni, mcnemar, wilcoxon};
use crate::corpus::{RefexInstance, TemplateText};
use crate::error::{Error, Result};
use crate::par::Execution;

/// Scores of one system on one instance set.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub system: String,
    pub instances: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// Mean character edit distance over all instances.
    pub sed_all: f64,
    /// Mean character edit distance over incorrect instances only.
    pub sed_incorrect_only: f64,
    pub pronoun: PronounMetrics,
    pub texts: usize,
    /// Fraction of texts whose every reference is correct.
    pub text_accuracy: f64,
    /// Corpus BLEU of relexicalized texts; needs the templates.
    pub bleu: Option<f64>,
}

/// A report plus the per-item outcomes the paired tests need.
#[derive(Clone, Debug)]
pub struct SystemEval {
    pub report: EvalReport,
    pub instance_ids: Vec<String>,
    pub correct: Vec<bool>,
    pub sed: Vec<f64>,
    pub text_ids: Vec<String>,
    pub text_candidates: Vec<Vec<String>>,
    pub text_references: Vec<Vec<Vec<String>>>,
}

fn joined_lower(tokens: &[String]) -> String {
    tokens.join(" ").to_lowercase()
}

/// Scores `preds` (aligned with `instances`). When `texts` is given, texts
/// with at least one evaluated instance are relexicalized for BLEU.
pub fn evaluate_system(
    system: &str,
    instances: &[RefexInstance],
    preds: &[Vec<String>],
    texts: Option<&[TemplateText]>,
) -> Result<SystemEval> {
    if instances.len() != preds.len() {
        return Err(Error::Contract(format!(
            "{system}: {} predictions for {} instances",
            preds.len(),
            instances.len()
        )));
    }
    if instances.is_empty() {
        return Err(Error::Contract(format!("{system}: nothing to evaluate")));
    }
    let golds: Vec<Vec<String>> = instances.iter().map(|i| i.refex.clone()).collect();
    let correct: Vec<bool> = preds.iter().zip(&golds).map(|(p, g)| same_refex(p, g)).collect();
    let sed: Vec<f64> = preds
        .iter()
        .zip(&golds)
        .map(|(p, g)| edit_distance(&joined_lower(p), &joined_lower(g)) as f64)
        .collect();
    let n_correct = correct.iter().filter(|c| **c).count();
    let wrong_sed: Vec<f64> = sed.iter().zip(&correct).filter(|(_, c)| !**c).map(|(s, _)| *s).collect();

    let mut by_text: BTreeMap<&str, bool> = BTreeMap::new();
    for (inst, ok) in instances.iter().zip(&correct) {
        *by_text.entry(&inst.text_id).or_insert(true) &= *ok;
    }
    let text_correct = by_text.values().filter(|ok| **ok).count();

    let mut out = SystemEval {
        report: EvalReport {
            system: system.to_string(),
            instances: instances.len(),
            correct: n_correct,
            accuracy: n_correct as f64 / instances.len() as f64,
            sed_all: sed.iter().sum::<f64>() / sed.len() as f64,
            sed_incorrect_only: if wrong_sed.is_empty() {
                0.0
            } else {
                wrong_sed.iter().sum::<f64>() / wrong_sed.len() as f64
            },
            pronoun: pronoun_metrics(preds, &golds)?,
            texts: by_text.len(),
            text_accuracy: text_correct as f64 / by_text.len() as f64,
            bleu: None,
        },
        instance_ids: instances.iter().map(|i| i.id.clone()).collect(),
        correct,
        sed,
        text_ids: Vec::new(),
        text_candidates: Vec::new(),
        text_references: Vec::new(),
    };

    if let Some(texts) = texts {
        let mut slots: HashMap<&str, HashMap<usize, Vec<String>>> = HashMap::new();
        for (inst, p) in instances.iter().zip(preds) {
            slots.entry(&inst.text_id).or_default().insert(inst.slot, p.clone());
        }
        for text in texts {
            let Some(assigned) = slots.get(text.id.as_str()) else { continue };
            out.text_ids.push(text.id.clone());
            out.text_candidates.push(relexicalize_text(text, assigned)?);
            out.text_references.push(vec![text.original.clone()]);
        }
        if !out.text_ids.is_empty() {
            out.report.bleu = Some(bleu(&out.text_candidates, &out.text_references, MAX_N)?);
        }
    }
    Ok(out)
}

pub const REPORT_COLUMNS: [&str; 14] = [
    "system",
    "instances",
    "accuracy",
    "sed_all",
    "sed_incorrect_only",
    "pronoun_accuracy",
    "pronoun_precision",
    "pronoun_recall",
    "pronoun_f1",
    "pronoun_undefined",
    "texts",
    "text_accuracy",
    "bleu",
    "correct",
];

impl EvalReport {
    pub fn tsv_row(&self) -> String {
        let bleu = self.bleu.map_or("-".to_string(), |b| format!("{b:.4}"));
        format!(
            "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}\t{:.6}\t{}\t{}",
            self.system,
            self.instances,
            self.accuracy,
            self.sed_all,
            self.sed_incorrect_only,
            self.pronoun.accuracy,
            self.pronoun.precision,
            self.pronoun.recall,
            self.pronoun.f1,
            self.pronoun.undefined,
            self.texts,
            self.text_accuracy,
            bleu,
            self.correct
        )
    }
}

pub fn reports_tsv(reports: &[EvalReport]) -> String {
    let mut s = REPORT_COLUMNS.join("\t");
    s.push('\n');
    for r in reports {
        s.push_str(&r.tsv_row());
        s.push('\n');
    }
    s
}

/// Fixed-width table grouped as all references, pronouns and texts.
pub fn render_table(reports: &[EvalReport]) -> String {
    let width = reports.iter().map(|r| r.system.len()).max().unwrap_or(0).max(6);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:w$} | {:^15} | {:^31} | {:^15}",
        "",
        "All References",
        "Pronouns",
        "Text",
        w = width
    );
    let _ = writeln!(
        s,
        "{:w$} | {:>7} {:>7} | {:>7} {:>7} {:>7} {:>7} | {:>7} {:>7}",
        "System",
        "Acc.",
        "SED",
        "Acc.",
        "Prec.",
        "Rec.",
        "F-Score",
        "Acc.",
        "BLEU",
        w = width
    );
    for r in reports {
        let bleu = r.bleu.map_or("-".to_string(), |b| format!("{b:.2}"));
        let _ = writeln!(
            s,
            "{:w$} | {:>7.2} {:>7.2} | {:>7.2} {:>7.2} {:>7.2} {:>7.2} | {:>7.2} {:>7}",
            r.system,
            100.0 * r.accuracy,
            r.sed_all,
            100.0 * r.pronoun.accuracy,
            100.0 * r.pronoun.precision,
            100.0 * r.pronoun.recall,
            100.0 * r.pronoun.f1,
            100.0 * r.text_accuracy,
            bleu,
            w = width
        );
    }
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct SignificanceRow {
    pub system_a: String,
    pub system_b: String,
    pub metric: String,
    pub statistic: f64,
    pub p_raw: f64,
    pub p_bonferroni: f64,
}

pub const SIGNIFICANCE_COLUMNS: [&str; 6] = ["system_a", "system_b", "metric", "statistic", "p_raw", "p_bonferroni"];

pub fn significance_tsv(rows: &[SignificanceRow]) -> String {
    let mut s = SIGNIFICANCE_COLUMNS.join("\t");
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}",
            r.system_a,
            r.system_b,
            r.metric,
            // Adding zero turns a negative zero into a positive one.
            r.statistic + 0.0,
            r.p_raw,
            r.p_bonferroni
        );
    }
    s
}

/// Pairwise tests between every two systems: McNemar on accuracy, Wilcoxon on
/// edit distance and randomization on BLEU when texts were scored. p-values
/// are Bonferroni-adjusted within each metric.
pub fn significance_matrix(systems: &[SystemEval], iterations: usize, seed: u64, exec: Execution) -> Result<Vec<SignificanceRow>> {
    let mut per_metric: BTreeMap<&'static str, Vec<SignificanceRow>> = BTreeMap::new();
    for (i, a) in systems.iter().enumerate() {
        for b in &systems[i + 1..] {
            if a.instance_ids != b.instance_ids {
                return Err(Error::Contract(format!(
                    "{} and {} were evaluated on different instances",
                    a.report.system, b.report.system
                )));
            }
            let row = |metric: &str, statistic: f64, p: f64| SignificanceRow {
                system_a: a.report.system.clone(),
                system_b: b.report.system.clone(),
                metric: metric.to_string(),
                statistic,
                p_raw: p,
                p_bonferroni: p,
            };
            let m = mcnemar(&a.correct, &b.correct)?;
            per_metric.entry("accuracy").or_default().push(row("accuracy", m.statistic, m.p_value));
            let w = wilcoxon(&a.sed, &b.sed)?;
            per_metric.entry("sed").or_default().push(row("sed", w.statistic, w.p_value));
            if !a.text_ids.is_empty() && a.text_ids == b.text_ids {
                let (sa, sb) = super::significance::paired_stats(&a.text_candidates, &b.text_candidates, &a.text_references)?;
                let s = significance_from_stats(&sa, &sb, iterations, seed, exec)?;
                per_metric.entry("bleu").or_default().push(row("bleu", s.delta, s.p_value));
            }
        }
    }
    let mut out = Vec::new();
    for (_, mut rows) in per_metric {
        let raw: Vec<f64> = rows.iter().map(|r| r.p_raw).collect();
        for (r, p) in rows.iter_mut().zip(bonferroni(&raw, raw.len())?) {
            r.p_bonferroni = p;
        }
        out.extend(rows);
    }
    Ok(out)
}
