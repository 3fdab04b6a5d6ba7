//! Prediction records and the JSON Lines exchange format.

use super::{postprocess_output, TranslationEngine, TranslatorError};
use crate::corpus::SnippetIntentPair;
use crate::pipeline::{standardize_pair, tokenize_snippet, ParserDictionaries, SlotMap, StandardizedPair};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

/// A test pair together with its standardized form and slot map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreparedPair {
    pub pair: SnippetIntentPair,
    pub standardized: StandardizedPair,
}

impl PreparedPair {
    pub fn new(pair: &SnippetIntentPair, dicts: &ParserDictionaries) -> Self {
        PreparedPair {
            pair: pair.clone(),
            standardized: standardize_pair(pair, dicts),
        }
    }

    pub fn prepare_all<'a>(
        pairs: impl IntoIterator<Item = &'a SnippetIntentPair>,
        dicts: &ParserDictionaries,
    ) -> Vec<Self> {
        pairs.into_iter().map(|p| Self::new(p, dicts)).collect()
    }
}

/// One candidate snippet for a test pair. Serialized as a predictions-file
/// record, with the raw engine text under `output`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prediction {
    pub pair_id: String,
    #[serde(rename = "output")]
    pub raw_output: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_snippet: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engine_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub missing: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Prediction {
    /// Builds a prediction whose final snippet is the post-processed image
    /// of `raw_output` under `slot_map`.
    pub fn from_raw(
        pair_id: &str,
        raw_output: &str,
        slot_map: &SlotMap,
        engine_id: &str,
        confidence: Option<f64>,
    ) -> Self {
        let processed = postprocess_output(&tokenize_snippet(raw_output), slot_map);
        Prediction {
            pair_id: pair_id.to_string(),
            raw_output: raw_output.to_string(),
            final_snippet: Some(processed.text),
            engine_id: Some(engine_id.to_string()),
            confidence,
            missing: false,
            warnings: processed.warnings,
        }
    }

    fn missing(pair_id: &str, engine_id: &str) -> Self {
        Prediction {
            pair_id: pair_id.to_string(),
            raw_output: String::new(),
            final_snippet: Some(String::new()),
            engine_id: Some(engine_id.to_string()),
            confidence: None,
            missing: true,
            warnings: vec!["no prediction supplied for this pair".to_string()],
        }
    }

    /// The post-processed snippet, empty if never computed.
    pub fn final_text(&self) -> &str {
        self.final_snippet.as_deref().unwrap_or("")
    }

    /// Recomputes the final snippet and reports whether it matches.
    pub fn is_consistent(&self, slot_map: &SlotMap) -> bool {
        let recomputed = postprocess_output(&tokenize_snippet(&self.raw_output), slot_map).text;
        self.final_text() == recomputed
    }
}

/// Runs `engine` over every prepared pair.
pub fn translate_pairs(engine: &dyn TranslationEngine, pairs: &[PreparedPair]) -> Vec<Prediction> {
    pairs
        .iter()
        .map(|p| {
            let t = engine.translate(&p.standardized.std_intent);
            Prediction::from_raw(
                &p.pair.pair_id,
                &t.snippet.joined(),
                &p.standardized.slot_map,
                engine.id(),
                Some(t.confidence),
            )
        })
        .collect()
}

/// Predictions aligned with the test pairs, plus non-fatal diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedPredictions {
    pub predictions: Vec<Prediction>,
    pub diagnostics: Vec<String>,
}

impl LoadedPredictions {
    pub fn missing_count(&self) -> usize {
        self.predictions.iter().filter(|p| p.missing).count()
    }
}

pub fn load_external_predictions(path: &Path, test_pairs: &[PreparedPair]) -> Result<LoadedPredictions, TranslatorError> {
    let file = std::fs::File::open(path).map_err(|source| TranslatorError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    read_external_predictions(file, test_pairs, &format!("external:{stem}"))
}

/// Reads `{pair_id, output}` records. Every test pair gets exactly one
/// prediction; pairs absent from the file become flagged empty predictions.
pub fn read_external_predictions<R: Read>(
    reader: R,
    test_pairs: &[PreparedPair],
    engine_id: &str,
) -> Result<LoadedPredictions, TranslatorError> {
    let wanted: HashMap<&str, &PreparedPair> = test_pairs.iter().map(|p| (p.pair.pair_id.as_str(), p)).collect();
    let mut found: HashMap<String, Prediction> = HashMap::new();
    let mut seen = HashSet::new();
    let mut diagnostics = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| TranslatorError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Prediction = serde_json::from_str(&line).map_err(|e| TranslatorError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if !seen.insert(record.pair_id.clone()) {
            return Err(TranslatorError::DuplicateId {
                pair_id: record.pair_id,
                line: line_no,
            });
        }
        let Some(prepared) = wanted.get(record.pair_id.as_str()) else {
            return Err(TranslatorError::UnknownId {
                pair_id: record.pair_id,
                line: line_no,
            });
        };
        let engine = record.engine_id.as_deref().unwrap_or(engine_id);
        let mut prediction = Prediction::from_raw(
            &record.pair_id,
            &record.raw_output,
            &prepared.standardized.slot_map,
            engine,
            record.confidence,
        );
        if let Some(stored) = &record.final_snippet {
            if Some(stored) != prediction.final_snippet.as_ref() {
                let msg = format!(
                    "line {line_no}: stored final_snippet for `{}` differs from the recomputed one; using the recomputed value",
                    record.pair_id
                );
                prediction.warnings.push(msg.clone());
                diagnostics.push(msg);
            }
        }
        found.insert(record.pair_id, prediction);
    }
    let predictions = test_pairs
        .iter()
        .map(|p| {
            found.remove(&p.pair.pair_id).unwrap_or_else(|| {
                diagnostics.push(format!("no prediction for pair `{}`", p.pair.pair_id));
                Prediction::missing(&p.pair.pair_id, engine_id)
            })
        })
        .collect();
    Ok(LoadedPredictions {
        predictions,
        diagnostics,
    })
}

pub fn write_predictions<W: Write>(predictions: &[Prediction], mut out: W) -> std::io::Result<()> {
    for p in predictions {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prepared(id: &str, intent: &str, snippet: &str) -> PreparedPair {
        let pair = SnippetIntentPair {
            pair_id: id.to_string(),
            program_id: "p".to_string(),
            line_index: 0,
            intent: intent.to_string(),
            snippet: snippet.to_string(),
            source_url: None,
            category: None,
        };
        PreparedPair::new(&pair, &ParserDictionaries::builtin())
    }

    fn pairs() -> Vec<PreparedPair> {
        vec![
            prepared("a", "move 0x50905090 into eax", "mov eax, 0x50905090"),
            prepared("b", "call kernel", "int 0x80"),
        ]
    }

    #[test]
    fn loads_and_destandardizes() {
        let text = "{\"pair_id\":\"a\",\"output\":\"mov eax , var0\"}\n\n{\"pair_id\":\"b\",\"output\":\"int 0x80\"}\n";
        let loaded = read_external_predictions(text.as_bytes(), &pairs(), "external:t").unwrap();
        assert_eq!(loaded.predictions[0].final_text(), "mov eax, 0x50905090");
        assert_eq!(loaded.predictions[1].final_text(), "int 0x80");
        assert!(loaded.diagnostics.is_empty());
    }

    #[test]
    fn missing_unknown_duplicate() {
        let text = "{\"pair_id\":\"b\",\"output\":\"int 0x80\"}\n";
        let loaded = read_external_predictions(text.as_bytes(), &pairs(), "x").unwrap();
        assert!(loaded.predictions[0].missing);
        assert_eq!(loaded.missing_count(), 1);
        assert_eq!(loaded.diagnostics.len(), 1);

        let text = "{\"pair_id\":\"zzz\",\"output\":\"nop\"}\n";
        let err = read_external_predictions(text.as_bytes(), &pairs(), "x").unwrap_err();
        assert!(err.to_string().contains("zzz"));

        let text = "{\"pair_id\":\"b\",\"output\":\"nop\"}\n{\"pair_id\":\"b\",\"output\":\"nop\"}\n";
        let err = read_external_predictions(text.as_bytes(), &pairs(), "x").unwrap_err();
        assert!(matches!(err, TranslatorError::DuplicateId { .. }));

        let err = read_external_predictions("{\"pair_id\":1}".as_bytes(), &pairs(), "x").unwrap_err();
        assert!(matches!(err, TranslatorError::Malformed { line: 1, .. }));
    }

    #[test]
    fn written_records_read_back_consistently() {
        let preds: Vec<Prediction> = pairs()
            .iter()
            .map(|p| Prediction::from_raw(&p.pair.pair_id, &p.standardized.std_snippet.joined(), &p.standardized.slot_map, "e", Some(0.5)))
            .collect();
        let mut buf = Vec::new();
        write_predictions(&preds, &mut buf).unwrap();
        let loaded = read_external_predictions(buf.as_slice(), &pairs(), "x").unwrap();
        assert!(loaded.diagnostics.is_empty());
        assert_eq!(loaded.predictions, preds);
    }
}
