//! Snippet- and program-level evaluation.
//!
//! Snippet metrics: corpus BLEU, exact match on canonical text, validator
//! syntax verdicts and semantic verdicts (human labels first, the rule-based
//! [`semantic_equivalence_check`] as a fallback). Program metrics roll the
//! per-pair verdicts up to lines, counting every line of a multi-line block as
//! wrong when the block is wrong.

mod bleu;
mod equivalence;
mod exact;
mod labels;
mod program;
mod report;

pub use bleu::{bleu_n, bleu_report, sentence_bleu, BleuReport, Smoothing, MAX_ORDER};
pub use equivalence::{semantic_equivalence_check, Equivalence};
pub use exact::{exact_match, exact_match_accuracy};
pub use labels::{ingest_labels, read_labels, FailureType, LabelConflict, LabelRecord, LabelSet, SemanticLabel, Verdict};
pub use program::{program_scores, PairOutcome, ProgramEvaluation, ProgramScore, ScoringOptions, VerdictSource};
pub use report::{aggregate_report, snippet_metrics, Aggregates, Breakdown, EvaluationReport, SnippetMetrics};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("{predictions} predictions but {references} references")]
    LengthMismatch { predictions: usize, references: usize },
    #[error("cannot score an empty corpus")]
    EmptyCorpus,
    #[error("BLEU order must be between 1 and 4, got {0}")]
    InvalidOrder(usize),
    #[error("no program scores to aggregate")]
    EmptyScores,
    #[error("inconsistent program score for `{program_id}`: {message}")]
    InvalidScore { program_id: String, message: String },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("labels line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("labels line {line}: unknown pair_id `{pair_id}`")]
    UnknownPair { pair_id: String, line: usize },
    #[error("invalid report: {0}")]
    Report(#[from] serde_json::Error),
}

fn check_aligned(predictions: usize, references: usize) -> Result<(), MetricsError> {
    if predictions != references {
        return Err(MetricsError::LengthMismatch { predictions, references });
    }
    if predictions == 0 {
        return Err(MetricsError::EmptyCorpus);
    }
    Ok(())
}
