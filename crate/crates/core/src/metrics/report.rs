//! Evaluation report assembly and rendering.

use super::bleu::{bleu_report, BleuReport};
use super::{check_aligned, exact_match_accuracy, MetricsError, PairOutcome, ProgramScore};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnippetMetrics {
    pub pairs: usize,
    pub bleu: BleuReport,
    pub exact_match_accuracy: f64,
    pub syntactic_rate: f64,
    pub semantic_rate: f64,
}

/// Single-line versus multi-line slices of the snippet metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub single_line: Option<SnippetMetrics>,
    pub multi_line: Option<SnippetMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub program_count: usize,
    pub mean_syntactic_ratio: f64,
    /// Population standard deviation over programs.
    pub std_syntactic_ratio: f64,
    pub mean_semantic_ratio: f64,
    pub std_semantic_ratio: f64,
    pub fully_correct_count: usize,
    pub compilable_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub snippet: Option<SnippetMetrics>,
    pub breakdown: Option<Breakdown>,
    pub per_program: Vec<ProgramScore>,
    pub aggregates: Aggregates,
    /// Unlabeled pairs the equivalence rules could not decide.
    #[serde(default)]
    pub unlabeled_unknown: usize,
    #[serde(default)]
    pub label_conflicts: usize,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

fn percent(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * hits as f64 / total as f64
    }
}

/// BLEU, exact match and verdict rates over aligned pairs.
pub fn snippet_metrics<S: AsRef<str>, T: AsRef<str>>(
    predictions: &[S],
    references: &[T],
    outcomes: &[PairOutcome],
    with_sentence: bool,
) -> Result<SnippetMetrics, MetricsError> {
    check_aligned(predictions.len(), references.len())?;
    check_aligned(predictions.len(), outcomes.len())?;
    Ok(SnippetMetrics {
        pairs: predictions.len(),
        bleu: bleu_report(predictions, references, with_sentence)?,
        exact_match_accuracy: exact_match_accuracy(predictions, references)?,
        syntactic_rate: percent(outcomes.iter().filter(|o| o.syntactic).count(), outcomes.len()),
        semantic_rate: percent(outcomes.iter().filter(|o| o.semantic).count(), outcomes.len()),
    })
}

impl Breakdown {
    /// Splits aligned pairs by the reference line count recorded in `outcomes`.
    pub fn compute<S: AsRef<str>, T: AsRef<str>>(
        predictions: &[S],
        references: &[T],
        outcomes: &[PairOutcome],
        with_sentence: bool,
    ) -> Result<Self, MetricsError> {
        check_aligned(predictions.len(), references.len())?;
        check_aligned(predictions.len(), outcomes.len())?;
        let slice = |multi: bool| -> Result<Option<SnippetMetrics>, MetricsError> {
            let idx: Vec<usize> = (0..outcomes.len()).filter(|&i| outcomes[i].multi_line == multi).collect();
            if idx.is_empty() {
                return Ok(None);
            }
            let p: Vec<&str> = idx.iter().map(|&i| predictions[i].as_ref()).collect();
            let r: Vec<&str> = idx.iter().map(|&i| references[i].as_ref()).collect();
            let o: Vec<PairOutcome> = idx.iter().map(|&i| outcomes[i].clone()).collect();
            snippet_metrics(&p, &r, &o, with_sentence).map(Some)
        };
        Ok(Breakdown {
            single_line: slice(false)?,
            multi_line: slice(true)?,
        })
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Unweighted program means and counts, plus optional snippet sections.
pub fn aggregate_report(
    scores: &[ProgramScore],
    snippet: Option<SnippetMetrics>,
    breakdown: Option<Breakdown>,
) -> Result<EvaluationReport, MetricsError> {
    if scores.is_empty() {
        return Err(MetricsError::EmptyScores);
    }
    let syn: Vec<f64> = scores.iter().map(|s| s.syntactic_ratio).collect();
    let sem: Vec<f64> = scores.iter().map(|s| s.semantic_ratio).collect();
    let (mean_syn, std_syn) = mean_std(&syn);
    let (mean_sem, std_sem) = mean_std(&sem);
    Ok(EvaluationReport {
        snippet,
        breakdown,
        per_program: scores.to_vec(),
        aggregates: Aggregates {
            program_count: scores.len(),
            mean_syntactic_ratio: mean_syn,
            std_syntactic_ratio: std_syn,
            mean_semantic_ratio: mean_sem,
            std_semantic_ratio: std_sem,
            fully_correct_count: scores.iter().filter(|s| s.fully_correct).count(),
            compilable_count: scores.iter().filter(|s| s.compilable).count(),
        },
        unlabeled_unknown: 0,
        label_conflicts: 0,
        diagnostics: Vec::new(),
    })
}

fn bleu_row(out: &mut String, name: &str, values: &[f64; 4], acc: Option<f64>) {
    let _ = write!(out, "{name:<12}");
    for v in values {
        let _ = write!(out, "{v:>9.2}");
    }
    match acc {
        Some(a) => {
            let _ = writeln!(out, "{a:>9.2}");
        }
        None => out.push('\n'),
    }
}

impl EvaluationReport {
    pub fn to_json(&self) -> Result<String, MetricsError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, MetricsError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Plain-text tables: snippet metrics, line-count slices, per program.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        if let Some(s) = &self.snippet {
            let _ = writeln!(out, "Snippet metrics ({} pairs)", s.pairs);
            let _ = writeln!(out, "{:<12}{:>9}{:>9}{:>9}{:>9}{:>9}", "", "BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4", "ACC");
            let rows = [("add-one", &s.bleu.smoothed), ("unsmoothed", &s.bleu.unsmoothed)];
            let (lead, rest) = match s.bleu.headline {
                super::Smoothing::AddOne => (rows[0], rows[1]),
                super::Smoothing::None => (rows[1], rows[0]),
            };
            bleu_row(&mut out, lead.0, lead.1, Some(s.exact_match_accuracy));
            bleu_row(&mut out, rest.0, rest.1, None);
            if let Some(sent) = &s.bleu.sentence_smoothed {
                bleu_row(&mut out, "sentence", sent, None);
            }
            let _ = writeln!(
                out,
                "Syntactic correctness {:.2}%  Semantic correctness {:.2}%\n",
                s.syntactic_rate, s.semantic_rate
            );
        }
        if let Some(b) = &self.breakdown {
            let _ = writeln!(out, "{:<12}{:>7}{:>9}{:>9}{:>9}{:>9}", "slice", "pairs", "BLEU-4", "ACC", "SYN", "SEM");
            for (name, m) in [("single-line", &b.single_line), ("multi-line", &b.multi_line)] {
                if let Some(m) = m {
                    let _ = writeln!(
                        out,
                        "{name:<12}{:>7}{:>9.2}{:>9.2}{:>9.2}{:>9.2}",
                        m.pairs, m.bleu.headline_scores()[3], m.exact_match_accuracy, m.syntactic_rate, m.semantic_rate
                    );
                }
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "{:<4}{:<28}{:>6}{:>7}{:>7}{:>8}{:>8}{:>7}{:>12}",
            "#", "program", "n_t", "n_syn", "n_sem", "syn", "sem", "full", "compilable"
        );
        for (i, p) in self.per_program.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:<4}{:<28}{:>6}{:>7}{:>7}{:>8.3}{:>8.3}{:>7}{:>12}",
                i + 1,
                p.program_id,
                p.n_t,
                p.n_syn,
                p.n_sem,
                p.syntactic_ratio,
                p.semantic_ratio,
                if p.fully_correct { "yes" } else { "no" },
                if p.compilable { "yes" } else { "no" }
            );
        }
        let a = &self.aggregates;
        let _ = writeln!(
            out,
            "\nPrograms {}  fully correct {}  compilable {}",
            a.program_count, a.fully_correct_count, a.compilable_count
        );
        let _ = writeln!(
            out,
            "Mean syntactic ratio {:.4} (std {:.4})\nMean semantic ratio {:.4} (std {:.4})",
            a.mean_syntactic_ratio, a.std_syntactic_ratio, a.mean_semantic_ratio, a.std_semantic_ratio
        );
        if self.unlabeled_unknown > 0 {
            let _ = writeln!(out, "Unlabeled pairs counted incorrect: {}", self.unlabeled_unknown);
        }
        if self.label_conflicts > 0 {
            let _ = writeln!(out, "Annotator conflicts: {}", self.label_conflicts);
        }
        out
    }
}
