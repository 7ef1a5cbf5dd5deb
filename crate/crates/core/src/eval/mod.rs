//! Automatic metrics and paired significance tests.
//!
//! Reference-level scores compare predicted and gold token sequences
//! case-insensitively. Text-level scores relexicalize each template with the
//! predicted references (constants are copied from their source value) and
//! compare against the original text.

mod bleu;
mod metrics;
mod relex;
mod report;
mod significance;
mod stats;

pub use bleu::{bleu, segment_stats, BleuStats, MAX_N};
pub use metrics::{accuracy, edit_distance, pronoun_metrics, same_refex, token_edit_distance, PronounMetrics};
pub use relex::{constant_sources, relexicalize, relexicalize_text};
pub use report::{
    evaluate_system, render_table, reports_tsv, significance_matrix, significance_tsv, EvalReport, SignificanceRow,
    SystemEval, REPORT_COLUMNS, SIGNIFICANCE_COLUMNS,
};
pub use significance::{bleu_significance, paired_stats, significance_from_stats, BleuSignificance, MIN_ITERATIONS};
pub use stats::{bonferroni, mcnemar, mcnemar_counts, wilcoxon, McNemar, Wilcoxon, WILCOXON_EXACT_MAX};
