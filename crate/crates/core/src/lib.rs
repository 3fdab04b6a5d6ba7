//! Natural-language to IA-32 assembly toolkit.
//!
//! The crate is organised around the stages of an intent-to-snippet
//! translation workflow:
//!
//! - [`corpus`]: loading, validating, splitting and summarising
//!   intent/snippet corpora grouped by source program.
//! - [`pipeline`]: intent and snippet tokenizers, stopword filtering, the
//!   rule-based intent parser and the standardize/destandardize pair.
//! - [`asm`]: a NASM-subset parser and operand-signature checker used as a
//!   syntactic-correctness oracle for snippets and whole programs.
//! - [`translator`]: the [`translator::TranslationEngine`] contract, a
//!   retrieval baseline, external prediction ingestion and output
//!   post-processing.
//! - [`metrics`]: BLEU, exact match, rule-based equivalence, semantic label
//!   ingestion and per-program aggregation into an evaluation report.

pub mod asm;
pub mod corpus;
pub mod metrics;
pub mod pipeline;
pub mod snippet;
pub mod translator;

pub use asm::{validate_program, validate_snippet, Diagnostic, InstructionTable, Severity, SourceLine};
pub use corpus::{load_corpus, Corpus, CorpusSplit, CorpusStats, Program, SnippetIntentPair};
pub use pipeline::{ParserDictionaries, SlotMap, StandardizedPair, TokenSequence};
pub use translator::{Prediction, RetrievalIndex, TranslationEngine};
