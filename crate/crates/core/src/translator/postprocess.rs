//! Text-level clean-up of engine output.

use crate::asm::{is_directive, InstructionTable, DATA_DIRECTIVES, PREFIXES};
use crate::pipeline::{destandardize, is_separator_like, tokenize_snippet, SlotMap, TokenSequence, SEPARATOR_TOKEN};

/// Post-processed output: canonical lines joined with real newlines.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PostProcessed {
    pub text: String,
    pub lines: Vec<String>,
    /// Placeholders with no slot value, left verbatim.
    pub unresolved: Vec<String>,
    pub warnings: Vec<String>,
}

/// Destandardizes raw engine tokens and renders them as canonical NASM lines.
///
/// Over-escaped separators (`\\n`) count as line breaks, empty lines are
/// dropped, and tokens are re-spaced as `label: mnemonic op1, op2`.
pub fn postprocess_output(raw_tokens: &TokenSequence, slot_map: &SlotMap) -> PostProcessed {
    let normalized = TokenSequence::snippet(raw_tokens.tokens().iter().map(|t| {
        if is_separator_like(t) {
            SEPARATOR_TOKEN.to_string()
        } else {
            t.clone()
        }
    }));
    let restored = destandardize(&normalized, slot_map);
    let warnings = restored
        .unresolved
        .iter()
        .map(|p| format!("placeholder `{p}` has no value in the query slot map"))
        .collect();
    let lines = render_lines(restored.sequence.tokens());
    PostProcessed {
        text: lines.join("\n"),
        lines,
        unresolved: restored.unresolved,
        warnings,
    }
}

/// Canonical form of a snippet written by hand or read from a file.
pub fn canonicalize_snippet(text: &str) -> String {
    postprocess_output(&tokenize_snippet(text), &SlotMap::new()).text
}

/// Splits on separators and renders each non-empty line.
pub fn render_lines(tokens: &[String]) -> Vec<String> {
    tokens
        .split(|t| t == SEPARATOR_TOKEN || is_separator_like(t))
        .filter(|line| !line.is_empty())
        .map(render_line)
        .filter(|line| !line.is_empty())
        .collect()
}

const SPACED_KEYWORDS: [&str; 10] = [
    "byte", "word", "dword", "qword", "tword", "long", "short", "near", "far", "strict",
];

fn is_wordlike(token: &str) -> bool {
    token.chars().next().is_some_and(|c| {
        c.is_alphanumeric() || matches!(c, '_' | '.' | '$' | '@' | '?' | '#' | '~' | '\'' | '"' | '`' | '\\')
    })
}

fn is_known_head(word: &str) -> bool {
    let w = word.to_lowercase();
    is_directive(&w) || PREFIXES.contains(&w.as_str()) || InstructionTable::builtin().is_instruction(&w)
}

fn render_line(tokens: &[String]) -> String {
    let (code, comment) = match tokens.iter().position(|t| t == ";") {
        Some(i) => (&tokens[..i], Some(&tokens[i + 1..])),
        None => (tokens, None),
    };
    let mut parts: Vec<String> = Vec::new();
    let mut code = code;
    if code.len() >= 2 && code[1] == ":" && is_wordlike(&code[0]) {
        parts.push(format!("{}:", code[0]));
        code = &code[2..];
    }
    let mut head = Vec::new();
    if code.first().is_some_and(|t| is_wordlike(t)) {
        head.push(code[0].as_str());
        let first = code[0].to_lowercase();
        if let Some(next) = code.get(1) {
            let next_lower = next.to_lowercase();
            let prefixed = PREFIXES.contains(&first.as_str()) && is_wordlike(next);
            let bare_label = !is_known_head(&first) && DATA_DIRECTIVES.contains(&next_lower.as_str());
            if prefixed || bare_label {
                head.push(next.as_str());
            }
        }
    }
    let operands = &code[head.len()..];
    let mut statement = head.join(" ");
    if !operands.is_empty() {
        let rendered: Vec<String> = split_operands(operands).into_iter().map(render_operand).collect();
        if !statement.is_empty() {
            statement.push(' ');
        }
        statement.push_str(rendered.join(", ").trim_end());
    }
    if !statement.is_empty() {
        parts.push(statement);
    }
    if let Some(comment) = comment {
        let text = comment.join(" ");
        parts.push(if text.is_empty() { ";".to_string() } else { format!("; {text}") });
    }
    parts.join(" ").trim().to_string()
}

fn split_operands(tokens: &[String]) -> Vec<&[String]> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, t) in tokens.iter().enumerate() {
        match t.as_str() {
            "[" | "(" => depth += 1,
            "]" | ")" => depth -= 1,
            "," if depth <= 0 => {
                out.push(&tokens[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&tokens[start..]);
    out
}

fn render_operand(tokens: &[String]) -> String {
    let mut out = String::new();
    let mut prev: Option<&str> = None;
    for t in tokens {
        if let Some(p) = prev {
            let left = is_wordlike(p) || p == ")" || p == "]";
            let right = is_wordlike(t) || t == "(" || t == "[";
            if (left && right) || SPACED_KEYWORDS.contains(&p.to_lowercase().as_str()) {
                out.push(' ');
            }
        }
        out.push_str(t);
        prev = Some(t);
    }
    out
}
