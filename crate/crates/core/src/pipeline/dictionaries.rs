use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashSet};
use std::path::Path;
use thiserror::Error;

const DEFAULT_DICTIONARIES: &str = include_str!("../../data/dictionaries.json");

/// Pattern value that makes a rule match members of the `registers` list.
pub const REGISTER_SET_PATTERN: &str = "@registers";

#[derive(Debug, Error)]
pub enum DictionaryError {
    #[error("failed to read dictionaries file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed dictionaries file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("rule `{name}`: {reason}")]
    BadRule { name: String, reason: String },
    #[error("duplicate rule name `{0}`")]
    DuplicateRule(String),
    #[error("word `{0}` is both a stopword and a non-standardizable keyword")]
    StopwordKeywordOverlap(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RuleSpec {
    name: String,
    pattern: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DictionariesFile {
    #[serde(default)]
    version: Option<String>,
    stopwords: Vec<String>,
    keywords: Vec<String>,
    registers: Vec<String>,
    rules: Vec<RuleSpec>,
}

#[derive(Debug, Clone)]
enum Matcher {
    Regex(Regex),
    RegisterSet,
}

/// A named recognizer; matches whole tokens only.
#[derive(Debug, Clone)]
pub struct RecognizerRule {
    name: String,
    pattern: String,
    matcher: Matcher,
}

impl RecognizerRule {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn pattern(&self) -> &str {
        &self.pattern
    }
}

/// Stopwords, non-standardizable keywords, register names and the ordered
/// recognizer rules used by the intent parser.
#[derive(Debug, Clone)]
pub struct ParserDictionaries {
    version: Option<String>,
    stopwords: HashSet<String>,
    keywords: HashSet<String>,
    registers: HashSet<String>,
    rules: Vec<RecognizerRule>,
}

fn lower_set(words: &[String]) -> HashSet<String> {
    words.iter().map(|w| w.to_lowercase()).collect()
}

/// Rejects constructs outside the portable subset (lookaround, backreferences).
fn check_portable(name: &str, pattern: &str) -> Result<(), DictionaryError> {
    let bad = |reason: &str| DictionaryError::BadRule {
        name: name.to_string(),
        reason: reason.to_string(),
    };
    for construct in ["(?<=", "(?<!", "(?=", "(?!"] {
        if pattern.contains(construct) {
            return Err(bad("lookaround assertions are not allowed"));
        }
    }
    let chars: Vec<char> = pattern.chars().collect();
    let mut i = 0;
    while i + 1 < chars.len() {
        if chars[i] == '\\' {
            let next = chars[i + 1];
            if next.is_ascii_digit() && next != '0' || next == 'k' {
                return Err(bad("backreferences are not allowed"));
            }
            i += 2;
        } else {
            i += 1;
        }
    }
    Ok(())
}

impl ParserDictionaries {
    /// The dictionaries bundled with the crate.
    pub fn builtin() -> Self {
        Self::from_json(DEFAULT_DICTIONARIES).expect("bundled dictionaries are valid")
    }

    pub fn load(path: &Path) -> Result<Self, DictionaryError> {
        let text = std::fs::read_to_string(path).map_err(|source| DictionaryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, DictionaryError> {
        let file: DictionariesFile = serde_json::from_str(text)?;
        let stopwords = lower_set(&file.stopwords);
        let keywords = lower_set(&file.keywords);
        let mut overlap: Vec<&String> = stopwords.intersection(&keywords).collect();
        overlap.sort();
        if let Some(w) = overlap.first() {
            return Err(DictionaryError::StopwordKeywordOverlap((*w).clone()));
        }
        let mut names = BTreeSet::new();
        let mut rules = Vec::with_capacity(file.rules.len());
        for spec in file.rules {
            if !names.insert(spec.name.clone()) {
                return Err(DictionaryError::DuplicateRule(spec.name));
            }
            let matcher = if spec.pattern == REGISTER_SET_PATTERN {
                Matcher::RegisterSet
            } else {
                check_portable(&spec.name, &spec.pattern)?;
                let re = Regex::new(&format!("^(?:{})$", spec.pattern)).map_err(|e| {
                    DictionaryError::BadRule {
                        name: spec.name.clone(),
                        reason: e.to_string(),
                    }
                })?;
                Matcher::Regex(re)
            };
            rules.push(RecognizerRule {
                name: spec.name,
                pattern: spec.pattern,
                matcher,
            });
        }
        Ok(ParserDictionaries {
            version: file.version,
            stopwords,
            keywords,
            registers: lower_set(&file.registers),
            rules,
        })
    }

    pub fn version(&self) -> Option<&str> {
        self.version.as_deref()
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(&token.to_lowercase())
    }

    pub fn is_keyword(&self, token: &str) -> bool {
        self.keywords.contains(&token.to_lowercase())
    }

    pub fn is_register(&self, token: &str) -> bool {
        self.registers.contains(&token.to_lowercase())
    }

    pub fn rules(&self) -> &[RecognizerRule] {
        &self.rules
    }

    pub fn keyword_count(&self) -> usize {
        self.keywords.len()
    }

    /// Name of the first rule that matches the whole token.
    pub fn classify(&self, token: &str) -> Option<&str> {
        self.rules
            .iter()
            .find(|rule| match &rule.matcher {
                Matcher::Regex(re) => re.is_match(token),
                Matcher::RegisterSet => self.is_register(token),
            })
            .map(|rule| rule.name.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_loads_with_45_keywords() {
        let d = ParserDictionaries::builtin();
        assert_eq!(d.keyword_count(), 45);
        assert!(d.is_stopword("The"));
        assert!(d.is_keyword("register"));
        assert!(d.is_keyword("EAX"));
    }

    #[test]
    fn rule_order_and_classification() {
        let d = ParserDictionaries::builtin();
        assert_eq!(d.classify("\\xe3\\xa1"), Some("byte_array"));
        assert_eq!(d.classify("\"/bin/sh\""), Some("quoted_string"));
        assert_eq!(d.classify("0xf2"), Some("hex_literal"));
        assert_eq!(d.classify("80h"), Some("hex_literal"));
        assert_eq!(d.classify("[ecx + 116]"), Some("bracketed_expression"));
        assert_eq!(d.classify("esp-4"), Some("math_expression"));
        assert_eq!(d.classify("ds"), Some("register_name"));
        assert_eq!(d.classify("eax"), Some("register_name"));
        assert_eq!(d.classify("_start"), Some("underscore_name"));
        assert_eq!(d.classify("recv_http_request"), Some("underscore_name"));
        assert_eq!(d.classify("IncAddr"), Some("camel_case_name"));
        assert_eq!(d.classify("variableName"), Some("camel_case_name"));
        assert_eq!(d.classify("double-word"), None);
        assert_eq!(d.classify("Move"), None);
        assert_eq!(d.classify("EBX"), Some("register_name"));
        assert_eq!(d.classify("var0"), None);
        assert_eq!(d.classify("decoder"), None);
        assert_eq!(d.classify("30"), None);
    }

    #[test]
    fn rejects_overlap_and_duplicates() {
        let overlap = r#"{"stopwords":["the"],"keywords":["The"],"registers":[],"rules":[]}"#;
        assert!(matches!(
            ParserDictionaries::from_json(overlap),
            Err(DictionaryError::StopwordKeywordOverlap(_))
        ));
        let dup = r#"{"stopwords":[],"keywords":[],"registers":[],
            "rules":[{"name":"a","pattern":"x"},{"name":"a","pattern":"y"}]}"#;
        assert!(matches!(ParserDictionaries::from_json(dup), Err(DictionaryError::DuplicateRule(_))));
    }

    #[test]
    fn rejects_non_portable_patterns() {
        for pat in ["(?<=a)b", "(a)\\1", "(?!x)y"] {
            let json = format!(
                r#"{{"stopwords":[],"keywords":[],"registers":[],"rules":[{{"name":"r","pattern":{}}}]}}"#,
                serde_json::to_string(pat).unwrap()
            );
            assert!(
                matches!(ParserDictionaries::from_json(&json), Err(DictionaryError::BadRule { .. })),
                "{pat}"
            );
        }
    }
}
