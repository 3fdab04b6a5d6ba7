use super::dictionaries::ParserDictionaries;
use super::tokenize::{tokenize_intent, tokenize_snippet, Origin, TokenSequence};
use crate::corpus::SnippetIntentPair;
use serde::{Deserialize, Serialize};

/// Whether `token` has the placeholder shape `var<N>`.
pub fn is_placeholder(token: &str) -> bool {
    placeholder_index(token).is_some()
}

pub fn placeholder_index(token: &str) -> Option<usize> {
    let digits = token.strip_prefix("var")?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if digits.len() > 1 && digits.starts_with('0') {
        return None;
    }
    digits.parse().ok()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotEntry {
    pub placeholder: String,
    pub value: String,
    /// Name of the recognizer rule that selected the value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
}

/// Ordered placeholder/value mapping. Entry `i` is always `var{i}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SlotMap {
    entries: Vec<SlotEntry>,
}

impl SlotMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `value` unless already mapped; returns its placeholder.
    /// Returns `None` for values that are themselves placeholders.
    pub fn insert(&mut self, value: &str, rule: Option<&str>) -> Option<&str> {
        if is_placeholder(value) || value.is_empty() {
            return None;
        }
        let idx = match self.entries.iter().position(|e| e.value == value) {
            Some(idx) => idx,
            None => {
                let idx = self.entries.len();
                self.entries.push(SlotEntry {
                    placeholder: format!("var{idx}"),
                    value: value.to_string(),
                    rule: rule.map(str::to_string),
                });
                idx
            }
        };
        Some(&self.entries[idx].placeholder)
    }

    pub fn value_of(&self, placeholder: &str) -> Option<&str> {
        let idx = placeholder_index(placeholder)?;
        self.entries.get(idx).map(|e| e.value.as_str())
    }

    pub fn entries(&self) -> &[SlotEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Checks the structural invariants; used after deserializing foreign maps.
    pub fn check(&self) -> Result<(), String> {
        for (i, e) in self.entries.iter().enumerate() {
            if e.placeholder != format!("var{i}") {
                return Err(format!("entry {i} has placeholder `{}`", e.placeholder));
            }
            if is_placeholder(&e.value) {
                return Err(format!("value `{}` is itself a placeholder", e.value));
            }
            if self.entries[..i].iter().any(|p| p.value == e.value) {
                return Err(format!("value `{}` mapped twice", e.value));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StandardizedPair {
    pub std_intent: TokenSequence,
    pub std_snippet: TokenSequence,
    pub slot_map: SlotMap,
}

/// Result of restoring placeholders; `unresolved` lists placeholders that had
/// no entry in the slot map and were left verbatim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Destandardized {
    pub sequence: TokenSequence,
    pub unresolved: Vec<String>,
}

/// Drops stopwords from an intent sequence. Snippet sequences pass through.
pub fn filter_stopwords(seq: &TokenSequence, dicts: &ParserDictionaries) -> TokenSequence {
    if seq.origin() == Origin::Snippet {
        return seq.clone();
    }
    TokenSequence::new(
        seq.tokens().iter().filter(|t| !dicts.is_stopword(t)).cloned(),
        seq.origin(),
    )
}

/// Tokenize and stopword-filter an intent.
pub fn preprocess_intent(intent: &str, dicts: &ParserDictionaries) -> TokenSequence {
    filter_stopwords(&tokenize_intent(intent), dicts)
}

/// Runs the recognizer rules over an intent and collects standardizable tokens.
///
/// Each token takes the classification of the first matching rule; tokens that
/// are non-standardizable keywords or already placeholders are skipped.
/// Numbering follows first appearance in the intent.
pub fn parse_intent(intent: &TokenSequence, dicts: &ParserDictionaries) -> SlotMap {
    let mut map = SlotMap::new();
    for token in intent.tokens() {
        if is_placeholder(token) || dicts.is_keyword(token) {
            continue;
        }
        if let Some(rule) = dicts.classify(token) {
            map.insert(token, Some(rule));
        }
    }
    map
}

fn replace_subsequence(tokens: &[String], needle: &[String], replacement: &str) -> Vec<String> {
    if needle.is_empty() {
        return tokens.to_vec();
    }
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        if tokens[i..].starts_with(needle) {
            out.push(replacement.to_string());
            i += needle.len();
        } else {
            out.push(tokens[i].clone());
            i += 1;
        }
    }
    out
}

/// Replaces every slot value in `seq` with its placeholder.
///
/// Intent sequences match values token-for-token; snippet sequences match the
/// value's snippet tokenization as a contiguous run, so `[ecx + 116]` in an
/// intent lines up with `[ ecx + 116 ]` in code.
pub fn apply_slot_map(seq: &TokenSequence, slot_map: &SlotMap) -> TokenSequence {
    let mut tokens = seq.tokens().to_vec();
    for entry in slot_map.entries() {
        let needle = match seq.origin() {
            Origin::Intent => vec![entry.value.clone()],
            Origin::Snippet => tokenize_snippet(&entry.value).into_tokens(),
        };
        tokens = replace_subsequence(&tokens, &needle, &entry.placeholder);
    }
    TokenSequence::new(tokens, seq.origin())
}

/// Standardize both sides of a pair. Slot discovery is intent-driven: values
/// that only occur in the snippet stay concrete.
pub fn standardize_pair(pair: &SnippetIntentPair, dicts: &ParserDictionaries) -> StandardizedPair {
    standardize_text(&pair.intent, &pair.snippet, dicts)
}

pub fn standardize_text(intent: &str, snippet: &str, dicts: &ParserDictionaries) -> StandardizedPair {
    let intent = preprocess_intent(intent, dicts);
    let slot_map = parse_intent(&intent, dicts);
    let std_intent = apply_slot_map(&intent, &slot_map);
    let std_snippet = apply_slot_map(&tokenize_snippet(snippet), &slot_map);
    StandardizedPair {
        std_intent,
        std_snippet,
        slot_map,
    }
}

/// Replaces placeholders with their slot values.
pub fn destandardize(seq: &TokenSequence, slot_map: &SlotMap) -> Destandardized {
    let mut tokens = Vec::with_capacity(seq.len());
    let mut unresolved = Vec::new();
    for token in seq.tokens() {
        if !is_placeholder(token) {
            tokens.push(token.clone());
            continue;
        }
        match slot_map.value_of(token) {
            Some(value) => match seq.origin() {
                Origin::Intent => tokens.push(value.to_string()),
                Origin::Snippet => tokens.extend(tokenize_snippet(value).into_tokens()),
            },
            None => {
                if !unresolved.contains(token) {
                    unresolved.push(token.clone());
                }
                tokens.push(token.clone());
            }
        }
    }
    Destandardized {
        sequence: TokenSequence::new(tokens, seq.origin()),
        unresolved,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dicts() -> ParserDictionaries {
        ParserDictionaries::builtin()
    }

    fn values(map: &SlotMap) -> Vec<(&str, &str)> {
        map.entries()
            .iter()
            .map(|e| (e.placeholder.as_str(), e.value.as_str()))
            .collect()
    }

    #[test]
    fn stopword_filtering() {
        let d = dicts();
        let seq = TokenSequence::intent(["move", "the", "value", "onto", "the", "stack"]);
        assert_eq!(filter_stopwords(&seq, &d).tokens(), ["move", "value", "stack"]);
        let empty = TokenSequence::intent(Vec::<String>::new());
        assert!(filter_stopwords(&empty, &d).is_empty());
        let plain = TokenSequence::intent(["push", "eax"]);
        assert_eq!(filter_stopwords(&plain, &d), plain);
    }

    #[test]
    fn parse_intent_examples() {
        let d = dicts();
        let seq = preprocess_intent("jump to _start if al equals 0xf2", &d);
        // order of appearance in the intent: _start first
        assert_eq!(values(&parse_intent(&seq, &d)), [("var0", "_start"), ("var1", "0xf2")]);

        let seq = preprocess_intent("compare 0xf2 and jump to _start", &d);
        assert_eq!(values(&parse_intent(&seq, &d)), [("var0", "0xf2"), ("var1", "_start")]);

        let seq = preprocess_intent("move the address into the register", &d);
        assert!(parse_intent(&seq, &d).is_empty());

        let seq = preprocess_intent("push the bytes \\xe3\\xa1", &d);
        assert_eq!(values(&parse_intent(&seq, &d)), [("var0", "\\xe3\\xa1")]);
    }

    #[test]
    fn standardize_examples() {
        let d = dicts();
        let sp = standardize_text("jump to _start if al equals 0xf2", "cmp al, 0xf2\\njz _start", &d);
        assert_eq!(sp.std_snippet.joined(), "cmp al , var1 \\n jz var0");
        assert_eq!(values(&sp.slot_map), [("var0", "_start"), ("var1", "0xf2")]);

        let sp = standardize_text("call kernel", "int 0x80", &d);
        assert!(sp.slot_map.is_empty());
        assert_eq!(sp.std_intent.tokens(), ["call", "kernel"]);
        assert_eq!(sp.std_snippet.tokens(), ["int", "0x80"]);

        let sp = standardize_text("push 0x80 and call 0x80", "push 0x80\\nint 0x80", &d);
        assert_eq!(sp.slot_map.len(), 1);
        assert_eq!(sp.std_intent.tokens(), ["push", "var0", "and", "call", "var0"]);
        assert_eq!(sp.std_snippet.joined(), "push var0 \\n int var0");
    }

    #[test]
    fn snippet_only_values_are_not_standardized() {
        let d = dicts();
        let sp = standardize_text("call kernel", "push 0x0b\\nint 0x80", &d);
        assert_eq!(sp.std_snippet.joined(), "push 0x0b \\n int 0x80");
    }

    #[test]
    fn bracketed_value_matches_token_run() {
        let d = dicts();
        let sp = standardize_text(
            "xor the address specified by [ecx + 116] and dh",
            "xor [ecx + 116], dh",
            &d,
        );
        assert_eq!(sp.std_snippet.joined(), "xor var0 , dh");
        let back = destandardize(&sp.std_snippet, &sp.slot_map);
        assert_eq!(back.sequence, tokenize_snippet("xor [ecx + 116], dh"));
    }

    #[test]
    fn destandardize_examples() {
        let mut map = SlotMap::new();
        map.insert("0xb", None);
        let seq = TokenSequence::snippet(["mov", "al", ",", "var0"]);
        let out = destandardize(&seq, &map);
        assert_eq!(out.sequence.tokens(), ["mov", "al", ",", "0xb"]);
        assert!(out.unresolved.is_empty());

        let out = destandardize(&seq, &SlotMap::new());
        assert_eq!(out.sequence, seq);

        let seq = TokenSequence::snippet(["mov", "var3", ",", "esp"]);
        let out = destandardize(&seq, &map);
        assert_eq!(out.sequence, seq);
        assert_eq!(out.unresolved, ["var3"]);
    }

    #[test]
    fn slot_map_guards() {
        let mut map = SlotMap::new();
        assert_eq!(map.insert("var2", None), None);
        assert_eq!(map.insert("0x1", None), Some("var0"));
        assert_eq!(map.insert("0x1", None), Some("var0"));
        assert_eq!(map.insert("0x2", None), Some("var1"));
        assert!(map.check().is_ok());
        assert!(is_placeholder("var10"));
        assert!(!is_placeholder("var01"));
        assert!(!is_placeholder("variable"));
    }

    #[test]
    fn parse_is_idempotent_on_standardized_intent() {
        let d = dicts();
        let sp = standardize_text(
            "Jump to the IncAddr label if the value in EAX is not equal to [edi] else go to 0x10",
            "scasd\\njnz IncAddr",
            &d,
        );
        assert!(!sp.slot_map.is_empty());
        assert!(parse_intent(&sp.std_intent, &d).is_empty());
    }
}
