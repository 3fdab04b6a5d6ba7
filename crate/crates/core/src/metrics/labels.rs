//! Human semantic labels and majority consensus.

use super::MetricsError;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Correct,
    Incorrect,
    Unlabeled,
}

/// A: wrong or missing operation. B: wrong operand, register or literal.
/// C: unresolved placeholder or label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FailureType {
    A,
    B,
    C,
}

/// One annotator's judgement as stored in a labels file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelRecord {
    pub pair_id: String,
    pub annotator: String,
    pub verdict: Verdict,
    #[serde(default)]
    pub failure_types: Vec<FailureType>,
    /// Overrides the validator's syntax verdict when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub syntactic_flag: Option<bool>,
}

/// Consensus label for one pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticLabel {
    pub pair_id: String,
    pub verdict: Verdict,
    /// Annotators on the winning side, comma separated.
    pub annotator: String,
    pub failure_types: BTreeSet<FailureType>,
    pub syntactic_flag: Option<bool>,
}

/// Disagreement among annotators of one pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelConflict {
    pub pair_id: String,
    pub correct_votes: usize,
    pub incorrect_votes: usize,
    pub resolved: Verdict,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    pub labels: BTreeMap<String, SemanticLabel>,
    pub conflicts: Vec<LabelConflict>,
}

impl LabelSet {
    pub fn get(&self, pair_id: &str) -> Option<&SemanticLabel> {
        self.labels.get(pair_id)
    }

    pub fn verdict(&self, pair_id: &str) -> Verdict {
        self.labels.get(pair_id).map_or(Verdict::Unlabeled, |l| l.verdict)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Builds consensus labels from raw records.
    pub fn from_records(records: Vec<LabelRecord>) -> Self {
        let mut grouped: BTreeMap<String, Vec<LabelRecord>> = BTreeMap::new();
        for r in records {
            grouped.entry(r.pair_id.clone()).or_default().push(r);
        }
        let mut set = LabelSet::default();
        for (pair_id, group) in grouped {
            let correct = group.iter().filter(|r| r.verdict == Verdict::Correct).count();
            let incorrect = group.iter().filter(|r| r.verdict == Verdict::Incorrect).count();
            let verdict = match correct.cmp(&incorrect) {
                std::cmp::Ordering::Greater => Verdict::Correct,
                std::cmp::Ordering::Less => Verdict::Incorrect,
                std::cmp::Ordering::Equal => Verdict::Unlabeled,
            };
            if correct > 0 && incorrect > 0 {
                set.conflicts.push(LabelConflict {
                    pair_id: pair_id.clone(),
                    correct_votes: correct,
                    incorrect_votes: incorrect,
                    resolved: verdict,
                });
            }
            let winners: Vec<&LabelRecord> = group.iter().filter(|r| r.verdict == verdict).collect();
            let flags: BTreeSet<bool> = winners.iter().filter_map(|r| r.syntactic_flag).collect();
            set.labels.insert(
                pair_id.clone(),
                SemanticLabel {
                    pair_id,
                    verdict,
                    annotator: winners.iter().map(|r| r.annotator.as_str()).collect::<Vec<_>>().join(","),
                    failure_types: if verdict == Verdict::Incorrect {
                        winners.iter().flat_map(|r| r.failure_types.iter().copied()).collect()
                    } else {
                        BTreeSet::new()
                    },
                    syntactic_flag: if flags.len() == 1 { flags.into_iter().next() } else { None },
                },
            );
        }
        set
    }
}

pub fn ingest_labels<S: AsRef<str>>(path: &Path, test_pair_ids: &[S]) -> Result<LabelSet, MetricsError> {
    let file = std::fs::File::open(path).map_err(|source| MetricsError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_labels(file, test_pair_ids)
}

/// Reads `{pair_id, annotator, verdict, failure_types[]}` JSON Lines.
pub fn read_labels<R: Read, S: AsRef<str>>(reader: R, test_pair_ids: &[S]) -> Result<LabelSet, MetricsError> {
    let known: HashSet<&str> = test_pair_ids.iter().map(AsRef::as_ref).collect();
    let mut records = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| MetricsError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: LabelRecord = serde_json::from_str(&line).map_err(|e| MetricsError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if !known.contains(record.pair_id.as_str()) {
            return Err(MetricsError::UnknownPair {
                pair_id: record.pair_id,
                line: line_no,
            });
        }
        if !record.failure_types.is_empty() && record.verdict != Verdict::Incorrect {
            return Err(MetricsError::Malformed {
                line: line_no,
                message: "failure types are only allowed on incorrect verdicts".to_string(),
            });
        }
        records.push(record);
    }
    Ok(LabelSet::from_records(records))
}
