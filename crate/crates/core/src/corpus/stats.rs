use super::{Corpus, CorpusError};
use crate::asm;
use crate::pipeline::{tokenize_intent, tokenize_snippet, TokenSequence};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};

/// Per-language statistics over one side of the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideStats {
    pub unique_statements: usize,
    pub unique_tokens: usize,
    pub avg_tokens_per_statement: f64,
    pub min_tokens: usize,
    pub max_tokens: usize,
    /// Share of token occurrences whose type occurs at most twice.
    pub low_frequency_token_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub intent: SideStats,
    pub snippet: SideStats,
    pub pair_count: usize,
    pub multi_line_count: usize,
    /// Physical lines that belong to multi-line snippets.
    pub multi_line_lines: usize,
    /// Instruction mnemonics only; directives and labels are not counted.
    pub mnemonic_frequency: BTreeMap<String, usize>,
}

/// One field that differs from a reference value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldDivergence {
    pub field: String,
    pub expected: f64,
    pub actual: f64,
}

fn side_stats(seqs: &[TokenSequence]) -> SideStats {
    let statements: HashSet<&[String]> = seqs.iter().map(|s| s.tokens()).collect();
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for seq in seqs {
        for t in seq.tokens() {
            *freq.entry(t.as_str()).or_default() += 1;
        }
    }
    let lens: Vec<usize> = seqs.iter().map(TokenSequence::len).collect();
    let total: usize = lens.iter().sum();
    let low: usize = freq.values().filter(|&&c| c <= 2).sum();
    SideStats {
        unique_statements: statements.len(),
        unique_tokens: freq.len(),
        avg_tokens_per_statement: total as f64 / seqs.len() as f64,
        min_tokens: lens.iter().copied().min().unwrap_or(0),
        max_tokens: lens.iter().copied().max().unwrap_or(0),
        low_frequency_token_share: if total == 0 { 0.0 } else { low as f64 / total as f64 },
    }
}

/// Corpus statistics under the crate's own tokenizers.
pub fn compute_stats(corpus: &Corpus) -> Result<CorpusStats, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::EmptyInput);
    }
    let intents: Vec<TokenSequence> = corpus.pairs().map(|p| tokenize_intent(&p.intent)).collect();
    let snippets: Vec<TokenSequence> = corpus.pairs().map(|p| tokenize_snippet(&p.snippet)).collect();
    let mut mnemonic_frequency = BTreeMap::new();
    let mut multi_line_count = 0;
    let mut multi_line_lines = 0;
    for pair in corpus.pairs() {
        let lines = pair.lines();
        if lines.len() > 1 {
            multi_line_count += 1;
            multi_line_lines += lines.len();
        }
        for line in lines {
            if let Ok(parsed) = asm::parse_line(line) {
                if let Some(m) = parsed.mnemonic {
                    if !asm::is_directive(&m) {
                        *mnemonic_frequency.entry(m).or_insert(0) += 1;
                    }
                }
            }
        }
    }
    Ok(CorpusStats {
        intent: side_stats(&intents),
        snippet: side_stats(&snippets),
        pair_count: corpus.pair_count(),
        multi_line_count,
        multi_line_lines,
        mnemonic_frequency,
    })
}

impl CorpusStats {
    /// Compares the ten headline figures (five per side) against `reference`.
    /// Counts must match exactly; averages within `avg_tolerance`.
    pub fn divergences(&self, reference: &[SideStats; 2], avg_tolerance: f64) -> Vec<FieldDivergence> {
        let mut out = Vec::new();
        for (name, actual, expected) in [("intent", &self.intent, &reference[0]), ("snippet", &self.snippet, &reference[1])] {
            let counts = [
                ("unique_statements", actual.unique_statements, expected.unique_statements),
                ("unique_tokens", actual.unique_tokens, expected.unique_tokens),
                ("min_tokens", actual.min_tokens, expected.min_tokens),
                ("max_tokens", actual.max_tokens, expected.max_tokens),
            ];
            for (field, a, e) in counts {
                if a != e {
                    out.push(FieldDivergence {
                        field: format!("{name}.{field}"),
                        expected: e as f64,
                        actual: a as f64,
                    });
                }
            }
            if (actual.avg_tokens_per_statement - expected.avg_tokens_per_statement).abs() > avg_tolerance {
                out.push(FieldDivergence {
                    field: format!("{name}.avg_tokens_per_statement"),
                    expected: expected.avg_tokens_per_statement,
                    actual: actual.avg_tokens_per_statement,
                });
            }
        }
        out
    }

    pub fn distinct_mnemonics(&self) -> usize {
        self.mnemonic_frequency.len()
    }

    /// Two-row text table (intent side, snippet side).
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<10} {:>18} {:>14} {:>16} {:>11} {:>11}\n",
            "Language", "Unique statements", "Unique tokens", "Avg tokens/stmt", "Min tokens", "Max tokens"
        ));
        for (name, s) in [("Intent", &self.intent), ("Snippet", &self.snippet)] {
            out.push_str(&format!(
                "{:<10} {:>18} {:>14} {:>16.2} {:>11} {:>11}\n",
                name, s.unique_statements, s.unique_tokens, s.avg_tokens_per_statement, s.min_tokens, s.max_tokens
            ));
        }
        out.push_str(&format!(
            "pairs: {}  multi-line snippets: {} ({} lines)  distinct mnemonics: {}\n",
            self.pair_count,
            self.multi_line_count,
            self.multi_line_lines,
            self.distinct_mnemonics()
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::read_corpus;

    fn corpus(records: &[(&str, &str)]) -> Corpus {
        let text: Vec<String> = records
            .iter()
            .enumerate()
            .map(|(i, (intent, snippet))| {
                serde_json::json!({
                    "pair_id": format!("x{i}"), "program_id": "p", "line_index": i,
                    "intent": intent, "snippet": snippet
                })
                .to_string()
            })
            .collect();
        read_corpus(text.join("\n").as_bytes()).unwrap()
    }

    #[test]
    fn single_pair() {
        let s = compute_stats(&corpus(&[("push the value", "push eax")])).unwrap();
        assert_eq!(s.intent.unique_statements, 1);
        assert_eq!(s.intent.min_tokens, 3);
        assert_eq!(s.intent.max_tokens, 3);
        assert_eq!(s.intent.avg_tokens_per_statement, 3.0);
        assert_eq!(s.snippet.avg_tokens_per_statement, 2.0);
        assert_eq!(s.mnemonic_frequency.get("push"), Some(&1));
    }

    #[test]
    fn empty_corpus_is_error() {
        assert!(matches!(compute_stats(&Corpus::default()), Err(CorpusError::EmptyInput)));
    }

    #[test]
    fn invariants_hold() {
        let s = compute_stats(&corpus(&[
            ("push eax", "push eax"),
            ("push eax", "push eax"),
            ("zero out eax and ecx", "xor ecx, ecx\\nmul ecx"),
            ("declare the code section", "section .text"),
        ]))
        .unwrap();
        for side in [&s.intent, &s.snippet] {
            assert!(side.min_tokens as f64 <= side.avg_tokens_per_statement);
            assert!(side.avg_tokens_per_statement <= side.max_tokens as f64);
            assert!(side.unique_statements <= s.pair_count);
        }
        assert_eq!(s.intent.unique_statements, 3);
        assert_eq!(s.multi_line_count, 1);
        assert_eq!(s.multi_line_lines, 2);
        assert!(!s.mnemonic_frequency.contains_key("section"));
        assert_eq!(s.mnemonic_frequency.get("push"), Some(&2));
    }

    #[test]
    fn divergence_report_is_itemized() {
        let s = compute_stats(&corpus(&[("push the value", "push eax")])).unwrap();
        let mut reference = [s.intent.clone(), s.snippet.clone()];
        assert!(s.divergences(&reference, 0.01).is_empty());
        reference[1].unique_tokens = 99;
        reference[0].avg_tokens_per_statement = 3.5;
        let d = s.divergences(&reference, 0.01);
        let fields: Vec<&str> = d.iter().map(|f| f.field.as_str()).collect();
        assert_eq!(fields, ["intent.avg_tokens_per_statement", "snippet.unique_tokens"]);
    }
}
