//! Pre-processing and destandardization.
//!
//! Intents are tokenized, stopword-filtered and scanned by the rule-based
//! intent parser, which produces a [`SlotMap`]. The standardizer rewrites
//! both intent and snippet with `var#` placeholders; [`destandardize`]
//! reverses the substitution on model output.

mod dictionaries;
mod export;
mod standardize;
mod tokenize;

pub use dictionaries::{DictionaryError, ParserDictionaries, RecognizerRule, REGISTER_SET_PATTERN};
pub use export::{export_partition, PreprocessedRecord};
pub use standardize::{
    apply_slot_map, destandardize, filter_stopwords, is_placeholder, parse_intent,
    placeholder_index, preprocess_intent, standardize_pair, standardize_text, Destandardized,
    SlotEntry, SlotMap, StandardizedPair,
};
pub use tokenize::{
    is_separator_like, tokenize_intent, tokenize_snippet, Origin, TokenSequence, SEPARATOR_TOKEN,
};
