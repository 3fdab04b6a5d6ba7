//! TF-IDF retrieval baseline over standardized intents.

use super::{Translation, TranslationEngine, TranslatorError};
use crate::pipeline::{StandardizedPair, TokenSequence};
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

#[derive(Debug, Clone)]
pub struct IndexEntry {
    pub pair_id: String,
    pub std_intent: TokenSequence,
    pub std_snippet: TokenSequence,
    weights: BTreeMap<String, f64>,
    norm_sq: f64,
}

impl IndexEntry {
    pub fn weights(&self) -> &BTreeMap<String, f64> {
        &self.weights
    }
}

/// Winner of a lookup: the entry position and its cosine similarity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievalHit {
    pub index: usize,
    pub similarity: f64,
}

/// Outcome of querying the index with each of its own intents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SelfConsistency {
    pub queries: usize,
    pub own_snippet: usize,
    /// Entries that share their exact standardized intent with an entry
    /// holding a different snippet.
    pub duplicate_intent_pairs: usize,
    /// Duplicate-intent entries that did not get their own snippet back.
    pub collisions: usize,
    /// Non-duplicate entries that did not get their own snippet back.
    pub failures: Vec<String>,
}

impl SelfConsistency {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Immutable retrieval index. Lookups are pure, so a shared reference can
/// serve concurrent queries.
#[derive(Debug, Clone)]
pub struct RetrievalIndex {
    entries: Vec<IndexEntry>,
    doc_freq: HashMap<String, usize>,
    engine_id: String,
}

/// Builds an index from `(pair_id, standardized pair)` items.
pub fn build_index<'a, I>(pairs: I) -> Result<RetrievalIndex, TranslatorError>
where
    I: IntoIterator<Item = (&'a str, &'a StandardizedPair)>,
{
    RetrievalIndex::build(pairs)
}

fn term_counts(tokens: &[String]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for t in tokens {
        *counts.entry(t.clone()).or_insert(0) += 1;
    }
    counts
}

impl RetrievalIndex {
    pub const ENGINE_ID: &'static str = "baseline-retrieval";

    pub fn build<'a, I>(pairs: I) -> Result<Self, TranslatorError>
    where
        I: IntoIterator<Item = (&'a str, &'a StandardizedPair)>,
    {
        let raw: Vec<(String, TokenSequence, TokenSequence)> = pairs
            .into_iter()
            .map(|(id, p)| (id.to_string(), p.std_intent.clone(), p.std_snippet.clone()))
            .collect();
        if raw.is_empty() {
            return Err(TranslatorError::EmptyTrainingSet);
        }
        let mut doc_freq: HashMap<String, usize> = HashMap::new();
        for (_, intent, _) in &raw {
            for term in term_counts(intent.tokens()).into_keys() {
                *doc_freq.entry(term).or_insert(0) += 1;
            }
        }
        let mut index = RetrievalIndex {
            entries: Vec::with_capacity(raw.len()),
            doc_freq,
            engine_id: Self::ENGINE_ID.to_string(),
        };
        let n = raw.len();
        for (pair_id, std_intent, std_snippet) in raw {
            let weights = index.weigh(std_intent.tokens(), n);
            let norm_sq = weights.values().map(|w| w * w).sum();
            index.entries.push(IndexEntry {
                pair_id,
                std_intent,
                std_snippet,
                weights,
                norm_sq,
            });
        }
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    /// `ln((N + 1) / (df + 1)) + 1`; unseen terms get `df = 0`.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.entries.len().max(1);
        Self::idf_with(n, self.doc_freq.get(term).copied().unwrap_or(0))
    }

    fn idf_with(n: usize, df: usize) -> f64 {
        ((n as f64 + 1.0) / (df as f64 + 1.0)).ln() + 1.0
    }

    fn weigh(&self, tokens: &[String], n: usize) -> BTreeMap<String, f64> {
        term_counts(tokens)
            .into_iter()
            .map(|(term, tf)| {
                let df = self.doc_freq.get(&term).copied().unwrap_or(0);
                let w = tf as f64 * Self::idf_with(n, df);
                (term, w)
            })
            .collect()
    }

    /// Cosine similarity between a query and entry `i`, in `[0, 1]`.
    pub fn similarity(&self, query: &TokenSequence, i: usize) -> f64 {
        let q = self.weigh(query.tokens(), self.entries.len());
        let q_norm_sq: f64 = q.values().map(|w| w * w).sum();
        self.cosine(&q, q_norm_sq, &self.entries[i])
    }

    fn cosine(&self, q: &BTreeMap<String, f64>, q_norm_sq: f64, entry: &IndexEntry) -> f64 {
        if q_norm_sq == 0.0 || entry.norm_sq == 0.0 {
            return 0.0;
        }
        let dot: f64 = q
            .iter()
            .filter_map(|(term, w)| entry.weights.get(term).map(|d| w * d))
            .sum();
        (dot / (q_norm_sq * entry.norm_sq).sqrt()).clamp(0.0, 1.0)
    }

    /// Highest similarity wins; among equals an entry whose intent is the
    /// query verbatim is preferred, then the shorter snippet, then the lowest
    /// pair id.
    pub fn retrieve(&self, query: &TokenSequence) -> RetrievalHit {
        let q = self.weigh(query.tokens(), self.entries.len());
        let q_norm_sq: f64 = q.values().map(|w| w * w).sum();
        let mut best = RetrievalHit {
            index: 0,
            similarity: self.cosine(&q, q_norm_sq, &self.entries[0]),
        };
        for i in 1..self.entries.len() {
            let sim = self.cosine(&q, q_norm_sq, &self.entries[i]);
            if self.prefer(query, i, sim, best) == Ordering::Less {
                best = RetrievalHit { index: i, similarity: sim };
            }
        }
        best
    }

    fn prefer(&self, query: &TokenSequence, i: usize, sim: f64, best: RetrievalHit) -> Ordering {
        let a = &self.entries[i];
        let b = &self.entries[best.index];
        best.similarity
            .partial_cmp(&sim)
            .unwrap_or(Ordering::Equal)
            .then_with(|| {
                let a_exact = a.std_intent.tokens() == query.tokens();
                let b_exact = b.std_intent.tokens() == query.tokens();
                b_exact.cmp(&a_exact)
            })
            .then_with(|| a.std_snippet.len().cmp(&b.std_snippet.len()))
            .then_with(|| a.pair_id.cmp(&b.pair_id))
    }

    /// Queries the index with every stored intent.
    pub fn self_consistency(&self) -> SelfConsistency {
        let mut by_intent: HashMap<&[String], Vec<usize>> = HashMap::new();
        for (i, e) in self.entries.iter().enumerate() {
            by_intent.entry(e.std_intent.tokens()).or_default().push(i);
        }
        let mut report = SelfConsistency {
            queries: self.entries.len(),
            own_snippet: 0,
            duplicate_intent_pairs: 0,
            collisions: 0,
            failures: Vec::new(),
        };
        for entry in &self.entries {
            let group = &by_intent[entry.std_intent.tokens()];
            let duplicate = group
                .iter()
                .any(|&j| self.entries[j].std_snippet.tokens() != entry.std_snippet.tokens());
            let hit = self.retrieve(&entry.std_intent);
            let own = self.entries[hit.index].std_snippet.tokens() == entry.std_snippet.tokens();
            if duplicate {
                report.duplicate_intent_pairs += 1;
            }
            match (own, duplicate) {
                (true, _) => report.own_snippet += 1,
                (false, true) => report.collisions += 1,
                (false, false) => report.failures.push(entry.pair_id.clone()),
            }
        }
        report
    }
}

impl TranslationEngine for RetrievalIndex {
    fn id(&self) -> &str {
        &self.engine_id
    }

    fn translate(&self, std_intent: &TokenSequence) -> Translation {
        let hit = self.retrieve(std_intent);
        Translation::new(self.entries[hit.index].std_snippet.clone(), hit.similarity)
    }
}
