//! Intent/snippet corpora grouped by source program.
//!
//! A corpus file is UTF-8 JSON Lines with one pair per line. Programs are
//! rebuilt from `(program_id, line_index)`, so the order of records in the
//! file does not matter.

mod split;
mod stats;

pub use split::{split_by_program, split_with_test_programs, CorpusSplit, Partition};
pub use stats::{compute_stats, CorpusStats, FieldDivergence, SideStats};

use crate::snippet;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: field `{field}`: {message}")]
    Schema {
        line: usize,
        field: String,
        message: String,
    },
    #[error("duplicate line_index {line_index} in program `{program_id}`")]
    DuplicateLine { program_id: String, line_index: usize },
    #[error("duplicate pair_id `{pair_id}` (line {line})")]
    DuplicatePairId { pair_id: String, line: usize },
    #[error("program `{program_id}` has no pair at line_index {line_index}")]
    MissingLine { program_id: String, line_index: usize },
    #[error("program `{program_id}` carries conflicting categories")]
    CategoryConflict { program_id: String },
    #[error("corpus is empty")]
    EmptyInput,
    #[error("infeasible split: {0}")]
    InfeasibleSplit(String),
    #[error("malformed split file: {0}")]
    SplitFile(String),
}

/// One English intent paired with a single- or multi-line snippet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnippetIntentPair {
    pub pair_id: String,
    pub program_id: String,
    pub line_index: usize,
    pub intent: String,
    /// Snippet text as stored; lines are separated by the two characters `\n`.
    pub snippet: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
}

impl SnippetIntentPair {
    pub fn lines(&self) -> Vec<&str> {
        snippet::physical_lines(&self.snippet)
    }

    pub fn line_count(&self) -> usize {
        self.lines().len()
    }

    pub fn is_multi_line(&self) -> bool {
        self.line_count() >= 2
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub program_id: String,
    pub category: Option<String>,
    /// Sorted by `line_index`, contiguous from 0.
    pub pairs: Vec<SnippetIntentPair>,
    /// Total physical assembly lines.
    pub n_t: usize,
}

impl Program {
    pub fn recompute_n_t(&self) -> usize {
        self.pairs.iter().map(SnippetIntentPair::line_count).sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    /// Ordered by `program_id`.
    pub programs: Vec<Program>,
}

impl Corpus {
    pub fn is_empty(&self) -> bool {
        self.programs.is_empty()
    }

    pub fn pair_count(&self) -> usize {
        self.programs.iter().map(|p| p.pairs.len()).sum()
    }

    pub fn pairs(&self) -> impl Iterator<Item = &SnippetIntentPair> {
        self.programs.iter().flat_map(|p| p.pairs.iter())
    }

    pub fn program(&self, program_id: &str) -> Option<&Program> {
        self.programs
            .binary_search_by(|p| p.program_id.as_str().cmp(program_id))
            .ok()
            .map(|i| &self.programs[i])
    }

    /// Groups validated pairs into programs, checking the cross-record invariants.
    pub fn from_pairs(pairs: Vec<SnippetIntentPair>) -> Result<Corpus, CorpusError> {
        let mut seen_ids = HashSet::new();
        let mut grouped: BTreeMap<String, Vec<SnippetIntentPair>> = BTreeMap::new();
        for (i, pair) in pairs.into_iter().enumerate() {
            if !seen_ids.insert(pair.pair_id.clone()) {
                return Err(CorpusError::DuplicatePairId {
                    pair_id: pair.pair_id,
                    line: i + 1,
                });
            }
            grouped.entry(pair.program_id.clone()).or_default().push(pair);
        }
        let mut programs = Vec::with_capacity(grouped.len());
        for (program_id, mut pairs) in grouped {
            pairs.sort_by_key(|p| p.line_index);
            for (expected, pair) in pairs.iter().enumerate() {
                if pair.line_index < expected {
                    return Err(CorpusError::DuplicateLine {
                        program_id,
                        line_index: pair.line_index,
                    });
                }
                if pair.line_index > expected {
                    return Err(CorpusError::MissingLine {
                        program_id,
                        line_index: expected,
                    });
                }
            }
            let mut category = None;
            for pair in &pairs {
                if let Some(c) = &pair.category {
                    match &category {
                        None => category = Some(c.clone()),
                        Some(existing) if existing != c => {
                            return Err(CorpusError::CategoryConflict { program_id });
                        }
                        _ => {}
                    }
                }
            }
            let n_t = pairs.iter().map(SnippetIntentPair::line_count).sum();
            programs.push(Program {
                program_id,
                category,
                pairs,
                n_t,
            });
        }
        Ok(Corpus { programs })
    }
}

const KNOWN_FIELDS: [&str; 7] = [
    "pair_id",
    "program_id",
    "line_index",
    "intent",
    "snippet",
    "source_url",
    "category",
];

fn schema(line: usize, field: &str, message: impl Into<String>) -> CorpusError {
    CorpusError::Schema {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

fn required_str(obj: &Map<String, Value>, line: usize, field: &str) -> Result<String, CorpusError> {
    match obj.get(field) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(schema(line, field, "expected a string")),
        None => Err(schema(line, field, "missing")),
    }
}

fn optional_str(obj: &Map<String, Value>, line: usize, field: &str) -> Result<Option<String>, CorpusError> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(schema(line, field, "expected a string")),
    }
}

fn parse_record(text: &str, line: usize) -> Result<SnippetIntentPair, CorpusError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| schema(line, "<record>", e.to_string()))?;
    let Value::Object(obj) = value else {
        return Err(schema(line, "<record>", "expected a JSON object"));
    };
    if let Some(unknown) = obj.keys().find(|k| !KNOWN_FIELDS.contains(&k.as_str())) {
        return Err(schema(line, unknown, "unknown field"));
    }
    let line_index = match obj.get("line_index") {
        Some(Value::Number(n)) => n
            .as_u64()
            .ok_or_else(|| schema(line, "line_index", "expected a non-negative integer"))?
            as usize,
        Some(_) => return Err(schema(line, "line_index", "expected a non-negative integer")),
        None => return Err(schema(line, "line_index", "missing")),
    };
    let pair = SnippetIntentPair {
        pair_id: required_str(&obj, line, "pair_id")?,
        program_id: required_str(&obj, line, "program_id")?,
        line_index,
        intent: required_str(&obj, line, "intent")?,
        snippet: required_str(&obj, line, "snippet")?,
        source_url: optional_str(&obj, line, "source_url")?,
        category: optional_str(&obj, line, "category")?,
    };
    if pair.pair_id.trim().is_empty() {
        return Err(schema(line, "pair_id", "empty"));
    }
    if pair.program_id.trim().is_empty() {
        return Err(schema(line, "program_id", "empty"));
    }
    if pair.intent.trim().is_empty() {
        return Err(schema(line, "intent", "empty after trimming"));
    }
    if pair.lines().is_empty() {
        return Err(schema(line, "snippet", "no non-empty assembly line"));
    }
    Ok(pair)
}

/// Parses a JSON Lines corpus from any reader. Blank lines are ignored.
pub fn read_corpus<R: Read>(reader: R) -> Result<Corpus, CorpusError> {
    let mut pairs = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: "<reader>".to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        pairs.push(parse_record(&line, i + 1)?);
    }
    Corpus::from_pairs(pairs)
}

pub fn load_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_corpus(file).map_err(|e| match e {
        CorpusError::Io { source, .. } => CorpusError::Io {
            path: path.display().to_string(),
            source,
        },
        other => other,
    })
}

/// Writes the corpus back as JSON Lines, programs in id order.
pub fn write_corpus<W: Write>(corpus: &Corpus, mut out: W) -> std::io::Result<()> {
    for pair in corpus.pairs() {
        serde_json::to_writer(&mut out, pair)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
