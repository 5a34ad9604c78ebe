//! Candidate scoring: exact match (plain and identifier-blind), MRR,
//! BLEU-4, character edit similarity, and report aggregation.

mod report;
mod score;

pub use report::{evaluate, failure_record, render_report, score_sample, EvalReport, SampleRecord};
pub use score::{
    bleu4, corpus_bleu4, edit_similarity, exact_match, levenshtein, mrr, ngram_counts,
    MetricError, NgramCounts, ID_PLACEHOLDER, MATCH_WINDOW,
};
