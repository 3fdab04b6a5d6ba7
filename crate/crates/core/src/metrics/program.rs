//! Per-pair verdicts and their roll-up to whole programs.

use super::{exact_match, semantic_equivalence_check, Equivalence, LabelSet, MetricsError, Verdict};
use crate::asm::{validate_program, validate_snippet, SystemAssembler};
use crate::corpus::Program;
use crate::translator::Prediction;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictSource {
    Label,
    ExactMatch,
    Rule,
    /// Unlabeled and undecided by the rules; counted as incorrect.
    UnknownPessimistic,
    Missing,
}

/// Verdicts for one test pair. A multi-line block is right or wrong as a whole.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub pair_id: String,
    pub program_id: String,
    pub lines: usize,
    pub multi_line: bool,
    pub syntactic: bool,
    pub semantic: bool,
    pub exact: bool,
    pub source: VerdictSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramScore {
    pub program_id: String,
    pub n_t: usize,
    pub n_syn: usize,
    pub n_sem: usize,
    pub syntactic_ratio: f64,
    pub semantic_ratio: f64,
    pub fully_correct: bool,
    pub compilable: bool,
}

impl ProgramScore {
    /// Checks `0 <= n_sem <= n_syn <= n_t` and `n_t > 0`.
    pub fn new(program_id: &str, n_t: usize, n_syn: usize, n_sem: usize, compilable: bool) -> Result<Self, MetricsError> {
        let invalid = |message: &str| MetricsError::InvalidScore {
            program_id: program_id.to_string(),
            message: message.to_string(),
        };
        if n_t == 0 {
            return Err(invalid("program has no lines"));
        }
        if n_syn > n_t {
            return Err(invalid("n_syn exceeds n_t"));
        }
        if n_sem > n_syn {
            return Err(invalid("n_sem exceeds n_syn"));
        }
        Ok(ProgramScore {
            program_id: program_id.to_string(),
            n_t,
            n_syn,
            n_sem,
            syntactic_ratio: n_syn as f64 / n_t as f64,
            semantic_ratio: n_sem as f64 / n_t as f64,
            fully_correct: n_sem == n_t,
            compilable,
        })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ScoringOptions<'a> {
    /// When set, program compilability comes from this assembler and
    /// disagreements with the internal validator become diagnostics.
    pub assembler: Option<&'a SystemAssembler>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramEvaluation {
    pub scores: Vec<ProgramScore>,
    pub outcomes: Vec<PairOutcome>,
    pub unlabeled_unknown: usize,
    pub diagnostics: Vec<String>,
}

fn score_pair(
    pair: &crate::corpus::SnippetIntentPair,
    prediction: Option<&Prediction>,
    labels: &LabelSet,
    diagnostics: &mut Vec<String>,
) -> PairOutcome {
    let lines = pair.line_count().max(1);
    let mut outcome = PairOutcome {
        pair_id: pair.pair_id.clone(),
        program_id: pair.program_id.clone(),
        lines,
        multi_line: lines > 1,
        syntactic: false,
        semantic: false,
        exact: false,
        source: VerdictSource::Missing,
    };
    let Some(prediction) = prediction.filter(|p| !p.missing) else {
        diagnostics.push(format!("pair `{}` has no prediction; counted incorrect", pair.pair_id));
        return outcome;
    };
    let text = prediction.final_text();
    let label = labels.get(&pair.pair_id);
    outcome.syntactic = label
        .and_then(|l| l.syntactic_flag)
        .unwrap_or_else(|| validate_snippet(text).syntactically_correct);
    outcome.exact = exact_match(text, &pair.snippet);
    let (semantic, source) = match label.map(|l| l.verdict) {
        Some(Verdict::Correct) => (true, VerdictSource::Label),
        Some(Verdict::Incorrect) => (false, VerdictSource::Label),
        _ if outcome.exact => (true, VerdictSource::ExactMatch),
        _ => match semantic_equivalence_check(text, &pair.snippet) {
            Equivalence::Equivalent => (true, VerdictSource::Rule),
            Equivalence::NotEquivalent => (false, VerdictSource::Rule),
            Equivalence::Unknown => (false, VerdictSource::UnknownPessimistic),
        },
    };
    if semantic && !outcome.syntactic {
        diagnostics.push(format!(
            "pair `{}` is judged semantically correct but fails the syntax check; counted incorrect",
            pair.pair_id
        ));
    }
    outcome.semantic = semantic && outcome.syntactic;
    outcome.source = source;
    outcome
}

/// Scores every program of the test set.
pub fn program_scores(
    programs: &[Program],
    predictions: &[Prediction],
    labels: &LabelSet,
    options: ScoringOptions<'_>,
) -> Result<ProgramEvaluation, MetricsError> {
    let by_id: HashMap<&str, &Prediction> = predictions.iter().map(|p| (p.pair_id.as_str(), p)).collect();
    let mut diagnostics = Vec::new();
    let mut outcomes = Vec::new();
    let mut scores = Vec::with_capacity(programs.len());
    for program in programs {
        let start = outcomes.len();
        let mut finals = Vec::with_capacity(program.pairs.len());
        let mut complete = true;
        for pair in &program.pairs {
            let prediction = by_id.get(pair.pair_id.as_str()).copied();
            let outcome = score_pair(pair, prediction, labels, &mut diagnostics);
            complete &= outcome.source != VerdictSource::Missing;
            finals.push(prediction.map_or("", |p| p.final_text()));
            outcomes.push(outcome);
        }
        let block = &outcomes[start..];
        let n_t = block.iter().map(|o| o.lines).sum();
        let n_syn = block.iter().filter(|o| o.syntactic).map(|o| o.lines).sum();
        let n_sem = block.iter().filter(|o| o.semantic).map(|o| o.lines).sum();
        let internal = validate_program(&finals);
        let compilable = match options.assembler {
            Some(asm) => match asm.assemble(&finals) {
                Ok(verdict) => {
                    if let Some(msg) = verdict.disagreement(&internal) {
                        diagnostics.push(format!("program `{}`: {msg}", program.program_id));
                    }
                    verdict.accepted
                }
                Err(e) => {
                    diagnostics.push(format!("program `{}`: system assembler failed: {e}", program.program_id));
                    internal.compilable
                }
            },
            None => internal.compilable,
        };
        scores.push(ProgramScore::new(&program.program_id, n_t, n_syn, n_sem, compilable && complete)?);
    }
    let unlabeled_unknown = outcomes
        .iter()
        .filter(|o| o.source == VerdictSource::UnknownPessimistic)
        .count();
    Ok(ProgramEvaluation {
        scores,
        outcomes,
        unlabeled_unknown,
        diagnostics,
    })
}
