//! Corpus-level BLEU over snippet tokens.

use super::{check_aligned, MetricsError};
use crate::pipeline::tokenize_snippet;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    None,
    /// Orders with zero matches use `(0 + 1) / (total + 1)`.
    #[default]
    AddOne,
}

/// Modified n-gram match and candidate counts for one order.
#[derive(Debug, Clone, Copy, Default)]
struct OrderCounts {
    matches: usize,
    total: usize,
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

fn order_counts(candidate: &[String], reference: &[String], n: usize) -> OrderCounts {
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let matches = cand
        .iter()
        .map(|(g, c)| (*c).min(refs.get(g).copied().unwrap_or(0)))
        .sum();
    OrderCounts {
        matches,
        total: candidate.len().saturating_sub(n - 1),
    }
}

fn precision(c: OrderCounts, smoothing: Smoothing) -> f64 {
    match (c.matches, smoothing) {
        (0, Smoothing::AddOne) => 1.0 / (c.total as f64 + 1.0),
        (_, _) if c.total == 0 => 0.0,
        (m, _) => m as f64 / c.total as f64,
    }
}

fn combine(counts: &[OrderCounts], cand_len: usize, ref_len: usize, smoothing: Smoothing) -> f64 {
    if cand_len == 0 {
        return 0.0;
    }
    let n = counts.len() as f64;
    let mut log_sum = 0.0;
    for c in counts {
        let p = precision(*c, smoothing);
        if p == 0.0 {
            return 0.0;
        }
        log_sum += p.ln() / n;
    }
    let bp = if cand_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / cand_len as f64).exp()
    };
    100.0 * bp * log_sum.exp()
}

fn tokenized<S: AsRef<str>>(texts: &[S]) -> Vec<Vec<String>> {
    texts.iter().map(|t| tokenize_snippet(t.as_ref()).into_tokens()).collect()
}

fn check_order(n: usize) -> Result<(), MetricsError> {
    if (1..=MAX_ORDER).contains(&n) {
        Ok(())
    } else {
        Err(MetricsError::InvalidOrder(n))
    }
}

/// Corpus BLEU-`n` as a percentage: clipped n-gram precisions for orders
/// `1..=n` summed over all pairs, geometric mean, one brevity penalty.
pub fn bleu_n<S: AsRef<str>, T: AsRef<str>>(
    predictions: &[S],
    references: &[T],
    n: usize,
    smoothing: Smoothing,
) -> Result<f64, MetricsError> {
    check_aligned(predictions.len(), references.len())?;
    check_order(n)?;
    Ok(corpus_bleu(&tokenized(predictions), &tokenized(references), n, smoothing))
}

fn corpus_bleu(cands: &[Vec<String>], refs: &[Vec<String>], n: usize, smoothing: Smoothing) -> f64 {
    let mut counts = vec![OrderCounts::default(); n];
    for (c, r) in cands.iter().zip(refs) {
        for (k, slot) in counts.iter_mut().enumerate() {
            let oc = order_counts(c, r, k + 1);
            slot.matches += oc.matches;
            slot.total += oc.total;
        }
    }
    let cand_len = cands.iter().map(Vec::len).sum();
    let ref_len = refs.iter().map(Vec::len).sum();
    combine(&counts, cand_len, ref_len, smoothing)
}

fn sentence_scores(cands: &[Vec<String>], refs: &[Vec<String>], n: usize, smoothing: Smoothing) -> f64 {
    let total: f64 = cands
        .iter()
        .zip(refs)
        .map(|(c, r)| {
            let counts: Vec<OrderCounts> = (1..=n).map(|k| order_counts(c, r, k)).collect();
            combine(&counts, c.len(), r.len(), smoothing)
        })
        .sum();
    total / cands.len() as f64
}

/// Mean of per-pair BLEU-`n` scores, each with its own brevity penalty.
pub fn sentence_bleu<S: AsRef<str>, T: AsRef<str>>(
    predictions: &[S],
    references: &[T],
    n: usize,
    smoothing: Smoothing,
) -> Result<f64, MetricsError> {
    check_aligned(predictions.len(), references.len())?;
    check_order(n)?;
    Ok(sentence_scores(&tokenized(predictions), &tokenized(references), n, smoothing))
}

/// BLEU-1..4, smoothed and unsmoothed, optionally with sentence averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuReport {
    pub smoothed: [f64; MAX_ORDER],
    pub unsmoothed: [f64; MAX_ORDER],
    /// Which of the two figures a report leads with.
    #[serde(default)]
    pub headline: Smoothing,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence_smoothed: Option<[f64; MAX_ORDER]>,
}

impl BleuReport {
    pub fn headline_scores(&self) -> &[f64; MAX_ORDER] {
        match self.headline {
            Smoothing::AddOne => &self.smoothed,
            Smoothing::None => &self.unsmoothed,
        }
    }
}

pub fn bleu_report<S: AsRef<str>, T: AsRef<str>>(
    predictions: &[S],
    references: &[T],
    with_sentence: bool,
) -> Result<BleuReport, MetricsError> {
    check_aligned(predictions.len(), references.len())?;
    let cands = tokenized(predictions);
    let refs = tokenized(references);
    let per_order = |f: &dyn Fn(usize) -> f64| -> [f64; MAX_ORDER] { std::array::from_fn(|k| f(k + 1)) };
    Ok(BleuReport {
        smoothed: per_order(&|n| corpus_bleu(&cands, &refs, n, Smoothing::AddOne)),
        unsmoothed: per_order(&|n| corpus_bleu(&cands, &refs, n, Smoothing::None)),
        headline: Smoothing::AddOne,
        sentence_smoothed: with_sentence.then(|| per_order(&|n| sentence_scores(&cands, &refs, n, Smoothing::AddOne))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operand_swap_has_no_bigram_matches() {
        let p = ["mov ebx, eax"];
        let r = ["mov eax, ebx"];
        assert_eq!(bleu_n(&p, &r, 1, Smoothing::None).unwrap(), 100.0);
        assert_eq!(bleu_n(&p, &r, 2, Smoothing::None).unwrap(), 0.0);
        // p2 = 1/4 after smoothing
        assert!((bleu_n(&p, &r, 2, Smoothing::AddOne).unwrap() - 50.0).abs() < 1e-9);
    }

    #[test]
    fn identical_corpora_score_100() {
        let c = ["xor ecx, ecx\\nmul ecx", "push 0x68732f2f", "int 0x80"];
        for n in 1..=4 {
            assert!((bleu_n(&c, &c, n, Smoothing::None).unwrap() - 100.0).abs() < 1e-9);
            assert!((bleu_n(&c, &c, n, Smoothing::AddOne).unwrap() - 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn brevity_penalty_applies() {
        let score = bleu_n(&["mov eax"], &["mov eax, ebx"], 1, Smoothing::None).unwrap();
        assert!((score - 100.0 * (1.0f64 - 4.0 / 2.0).exp()).abs() < 1e-9);
    }

    #[test]
    fn errors() {
        assert!(matches!(bleu_n(&["a"], &["a", "b"], 1, Smoothing::None), Err(MetricsError::LengthMismatch { .. })));
        assert!(matches!(bleu_n::<&str, &str>(&[], &[], 1, Smoothing::None), Err(MetricsError::EmptyCorpus)));
        assert!(matches!(bleu_n(&["a"], &["a"], 5, Smoothing::None), Err(MetricsError::InvalidOrder(5))));
    }
}
