use serde::{Deserialize, Serialize};
use std::fmt;

/// Token standing for a snippet line break.
pub const SEPARATOR_TOKEN: &str = "\\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Intent,
    Snippet,
}

/// An ordered list of non-empty tokens tagged with the side they came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSequence {
    tokens: Vec<String>,
    origin: Origin,
}

impl TokenSequence {
    /// Empty strings are dropped.
    pub fn new<I, S>(tokens: I, origin: Origin) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens = tokens
            .into_iter()
            .map(Into::into)
            .filter(|t: &String| !t.is_empty())
            .collect();
        TokenSequence { tokens, origin }
    }

    pub fn intent<I: IntoIterator<Item = S>, S: Into<String>>(tokens: I) -> Self {
        Self::new(tokens, Origin::Intent)
    }

    pub fn snippet<I: IntoIterator<Item = S>, S: Into<String>>(tokens: I) -> Self {
        Self::new(tokens, Origin::Snippet)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.tokens
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Canonical serialized form: tokens joined by single spaces.
    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.joined())
    }
}

fn is_intent_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '$' | '@' | '/')
}

fn is_intent_connector(c: char) -> bool {
    matches!(c, '-' | '+' | '*' | '.')
}

/// Entity-preserving word tokenizer for English intents.
///
/// Whitespace separates tokens. Square-bracketed expressions, quoted strings
/// and `\xHH` byte runs are kept whole, as are words joined by `- + * .`
/// (so `esp-4`, `/bin/sh`, `_start` and `0xf2` stay single tokens). Any
/// other punctuation becomes a token of its own.
pub fn tokenize_intent(text: &str) -> TokenSequence {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let at_boundary = i == 0 || chars[i - 1].is_whitespace() || chars[i - 1] == '(';
        if c == '[' {
            if let Some(end) = find_from(&chars, i + 1, |c| c == ']' || c == '[') {
                if chars[end] == ']' {
                    tokens.push(chars[i..=end].iter().collect());
                    i = end + 1;
                    continue;
                }
            }
        } else if c == '"' || (c == '\'' && at_boundary) {
            if let Some(end) = find_from(&chars, i + 1, |x| x == c) {
                tokens.push(chars[i..=end].iter().collect());
                i = end + 1;
                continue;
            }
        } else if c == '\\' {
            let end = byte_run_end(&chars, i);
            if end > i {
                tokens.push(chars[i..end].iter().collect());
                i = end;
                continue;
            }
        } else if is_intent_word_char(c) {
            let mut end = i;
            loop {
                while end < chars.len() && is_intent_word_char(chars[end]) {
                    end += 1;
                }
                if end + 1 < chars.len()
                    && is_intent_connector(chars[end])
                    && is_intent_word_char(chars[end + 1])
                {
                    end += 1;
                } else {
                    break;
                }
            }
            tokens.push(chars[i..end].iter().collect());
            i = end;
            continue;
        }
        tokens.push(c.to_string());
        i += 1;
    }
    TokenSequence::intent(tokens)
}

fn find_from(chars: &[char], from: usize, pred: impl Fn(char) -> bool) -> Option<usize> {
    (from..chars.len()).find(|&j| pred(chars[j]))
}

/// End index of a run of `\xHH` escapes starting at `start` (== start if none).
fn byte_run_end(chars: &[char], start: usize) -> usize {
    let mut end = start;
    while end + 4 <= chars.len() {
        if chars[end] == '\\'
            && (chars[end + 1] == 'x' || chars[end + 1] == 'X')
            && chars[end + 2].is_ascii_hexdigit()
            && chars[end + 3].is_ascii_hexdigit()
        {
            end += 4;
        } else {
            break;
        }
    }
    end
}

fn is_snippet_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '.' | '$' | '@' | '?' | '#' | '~')
}

/// Lexical tokenizer for assembly snippets.
///
/// Commas, brackets, arithmetic operators and colons are standalone tokens.
/// A line break (real or the stored `\n` pair) becomes [`SEPARATOR_TOKEN`];
/// a doubled escape such as `\\n` is kept verbatim so that post-processing can
/// normalise it. Quoted strings are single tokens.
pub fn tokenize_snippet(text: &str) -> TokenSequence {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens: Vec<String> = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            tokens.push(SEPARATOR_TOKEN.to_string());
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        match c {
            '\\' => {
                let mut end = i;
                while end < chars.len() && chars[end] == '\\' {
                    end += 1;
                }
                if end < chars.len() && chars[end] == 'n' {
                    end += 1;
                }
                tokens.push(chars[i..end].iter().collect());
                i = end;
            }
            '"' | '\'' | '`' => match find_from(&chars, i + 1, |x| x == c) {
                Some(end) => {
                    tokens.push(chars[i..=end].iter().collect());
                    i = end + 1;
                }
                None => {
                    tokens.push(chars[i..].iter().collect());
                    i = chars.len();
                }
            },
            '<' | '>' if i + 1 < chars.len() && chars[i + 1] == c => {
                tokens.push(format!("{c}{c}"));
                i += 2;
            }
            c if is_snippet_word_char(c) => {
                let mut end = i;
                while end < chars.len() && is_snippet_word_char(chars[end]) {
                    end += 1;
                }
                tokens.push(chars[i..end].iter().collect());
                i = end;
            }
            c => {
                tokens.push(c.to_string());
                i += 1;
            }
        }
    }
    TokenSequence::snippet(tokens)
}

/// Whether a snippet token is a (possibly over-escaped) line separator.
pub fn is_separator_like(token: &str) -> bool {
    token.len() >= 2 && token.ends_with('n') && token[..token.len() - 1].chars().all(|c| c == '\\')
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(seq: &TokenSequence) -> Vec<&str> {
        seq.tokens().iter().map(String::as_str).collect()
    }

    #[test]
    fn intent_examples() {
        assert_eq!(toks(&tokenize_intent("move 0xf2 into al")), ["move", "0xf2", "into", "al"]);
        assert_eq!(
            toks(&tokenize_intent("declare the _start label")),
            ["declare", "the", "_start", "label"]
        );
        assert_eq!(toks(&tokenize_intent("call kernel")), ["call", "kernel"]);
    }

    #[test]
    fn intent_entities_stay_whole() {
        assert_eq!(
            toks(&tokenize_intent("Move 0xb into AL.")),
            ["Move", "0xb", "into", "AL", "."]
        );
        assert_eq!(
            toks(&tokenize_intent("xor the address specified by [ecx + 116] and dh")),
            ["xor", "the", "address", "specified", "by", "[ecx + 116]", "and", "dh"]
        );
        assert_eq!(toks(&tokenize_intent("push \\xe3\\xa1 now")), ["push", "\\xe3\\xa1", "now"]);
        assert_eq!(toks(&tokenize_intent("Put /bin/sh into ebx")), ["Put", "/bin/sh", "into", "ebx"]);
        assert_eq!(toks(&tokenize_intent("address esp-4, ok")), ["address", "esp-4", ",", "ok"]);
        assert_eq!(
            toks(&tokenize_intent("store \"/bin//sh\" here")),
            ["store", "\"/bin//sh\"", "here"]
        );
        assert_eq!(toks(&tokenize_intent("0x32, 0x51,0x30")), ["0x32", ",", "0x51", ",", "0x30"]);
    }

    #[test]
    fn intent_unbalanced_bracket_is_punctuation() {
        assert_eq!(toks(&tokenize_intent("a [b c")), ["a", "[", "b", "c"]);
    }

    #[test]
    fn snippet_examples() {
        assert_eq!(
            toks(&tokenize_snippet("xor [ecx + 116], dh")),
            ["xor", "[", "ecx", "+", "116", "]", ",", "dh"]
        );
        assert_eq!(
            toks(&tokenize_snippet("cmp al, 0xf2\\njz _start")),
            ["cmp", "al", ",", "0xf2", "\\n", "jz", "_start"]
        );
        assert_eq!(toks(&tokenize_snippet("pop eax")), ["pop", "eax"]);
    }

    #[test]
    fn snippet_misc() {
        assert_eq!(
            toks(&tokenize_snippet("mov dword [esp-4], esi")),
            ["mov", "dword", "[", "esp", "-", "4", "]", ",", "esi"]
        );
        assert_eq!(toks(&tokenize_snippet("a\nb")), ["a", "\\n", "b"]);
        assert_eq!(toks(&tokenize_snippet("scasd \\\\ jnz")), ["scasd", "\\\\", "jnz"]);
        assert_eq!(toks(&tokenize_snippet("x \\\\n y")), ["x", "\\\\n", "y"]);
        assert_eq!(toks(&tokenize_snippet("msg db \"hi, there\", 0")), ["msg", "db", "\"hi, there\"", ",", "0"]);
        assert_eq!(toks(&tokenize_snippet("_start:")), ["_start", ":"]);
        assert_eq!(toks(&tokenize_snippet("section .text")), ["section", ".text"]);
        assert!(is_separator_like("\\n"));
        assert!(is_separator_like("\\\\n"));
        assert!(!is_separator_like("n"));
        assert!(!is_separator_like("\\\\"));
    }

    #[test]
    fn determinism() {
        let s = "jump short to the decode label if al != cl";
        assert_eq!(tokenize_intent(s), tokenize_intent(s));
        assert_eq!(tokenize_snippet(s), tokenize_snippet(s));
    }
}
