//! Translation engines and output post-processing.
//!
//! Engines map a standardized intent to a standardized snippet. The built-in
//! [`RetrievalIndex`] returns the snippet of the most similar training intent;
//! external engines are consumed through prediction files. Either way the raw
//! output goes through [`postprocess_output`] before evaluation.

mod postprocess;
mod predictions;
mod retrieval;

pub use postprocess::{canonicalize_snippet, postprocess_output, render_lines, PostProcessed};
pub use predictions::{
    load_external_predictions, read_external_predictions, translate_pairs, write_predictions, LoadedPredictions,
    PreparedPair, Prediction,
};
pub use retrieval::{build_index, IndexEntry, RetrievalHit, RetrievalIndex, SelfConsistency};

use crate::pipeline::{TokenSequence, SEPARATOR_TOKEN};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TranslatorError {
    #[error("cannot build an index from an empty training set")]
    EmptyTrainingSet,
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("predictions line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("predictions line {line}: duplicate pair_id `{pair_id}`")]
    DuplicateId { pair_id: String, line: usize },
    #[error("predictions line {line}: unknown pair_id `{pair_id}`")]
    UnknownId { pair_id: String, line: usize },
}

/// A standardized snippet with the engine's confidence in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Translation {
    pub snippet: TokenSequence,
    pub confidence: f64,
}

impl Translation {
    /// Drops leading and trailing line separators and clamps the confidence.
    pub fn new(snippet: TokenSequence, confidence: f64) -> Self {
        let tokens = snippet.tokens();
        let start = tokens.iter().position(|t| t != SEPARATOR_TOKEN).unwrap_or(tokens.len());
        let end = tokens.iter().rposition(|t| t != SEPARATOR_TOKEN).map_or(start, |e| e + 1);
        Translation {
            snippet: TokenSequence::snippet(tokens[start..end].to_vec()),
            confidence: if confidence.is_nan() { 0.0 } else { confidence.clamp(0.0, 1.0) },
        }
    }
}

/// Maps a standardized intent to a standardized snippet. Implementations
/// must be deterministic for a fixed state and input.
pub trait TranslationEngine {
    fn id(&self) -> &str;
    fn translate(&self, std_intent: &TokenSequence) -> Translation;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn translation_trims_separators() {
        let t = Translation::new(TokenSequence::snippet(["\\n", "nop", "\\n", "nop", "\\n"]), 1.5);
        assert_eq!(t.snippet.joined(), "nop \\n nop");
        assert_eq!(t.confidence, 1.0);
        let t = Translation::new(TokenSequence::snippet(["\\n"]), f64::NAN);
        assert!(t.snippet.is_empty());
        assert_eq!(t.confidence, 0.0);
    }
}
