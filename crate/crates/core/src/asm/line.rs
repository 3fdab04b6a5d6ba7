use super::operand::{is_identifier, parse_operand, Operand, OperandKind};
use super::{is_reserved, Diagnostic, InstructionTable, DATA_DIRECTIVES, PREFIXES};
use serde::{Deserialize, Serialize};
use std::fmt;

/// One parsed NASM source line: `label: mnemonic operands ; comment`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceLine {
    pub label: Option<String>,
    pub prefix: Option<String>,
    /// Count expression of a `times` prefix.
    pub repeat: Option<Operand>,
    pub mnemonic: Option<String>,
    pub operands: Vec<Operand>,
    pub comment: Option<String>,
    pub raw: String,
}

/// Directives whose arguments are bare words rather than operands.
const WORD_DIRECTIVES: [&str; 6] = ["section", "segment", "global", "extern", "cpu", "default"];

impl SourceLine {
    /// Equality ignoring the original text.
    pub fn same_structure(&self, other: &SourceLine) -> bool {
        self.label == other.label
            && self.prefix == other.prefix
            && self.repeat == other.repeat
            && self.mnemonic == other.mnemonic
            && self.operands == other.operands
            && self.comment == other.comment
    }

    pub fn is_instruction(&self) -> bool {
        self.mnemonic
            .as_deref()
            .is_some_and(|m| InstructionTable::builtin().is_instruction(m))
    }

    fn label_takes_colon(&self) -> bool {
        !self.mnemonic.as_deref().is_some_and(|m| DATA_DIRECTIVES.contains(&m)) && self.repeat.is_none()
    }
}

impl fmt::Display for SourceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        if let Some(label) = &self.label {
            if self.label_takes_colon() {
                parts.push(format!("{label}:"));
            } else {
                parts.push(label.clone());
            }
        }
        if let Some(p) = &self.prefix {
            parts.push(p.clone());
        }
        if let Some(r) = &self.repeat {
            parts.push(format!("times {r}"));
        }
        if let Some(m) = &self.mnemonic {
            parts.push(m.clone());
            if !self.operands.is_empty() {
                let ops: Vec<String> = self.operands.iter().map(Operand::to_string).collect();
                let sep = if WORD_DIRECTIVES.contains(&m.as_str()) { " " } else { ", " };
                parts.push(ops.join(sep));
            }
        }
        if let Some(c) = &self.comment {
            parts.push(format!("; {c}"));
        }
        f.write_str(&parts.join(" "))
    }
}

fn parse_error(code: &str, message: impl Into<String>) -> Diagnostic {
    Diagnostic::error(code, message)
}

/// Splits off the comment (first `;` outside quotes) and rejects stray backslashes.
fn split_comment(text: &str) -> Result<(&str, Option<&str>), Diagnostic> {
    let mut quote: Option<char> = None;
    for (i, c) in text.char_indices() {
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => {}
            None => match c {
                '\'' | '"' | '`' => quote = Some(c),
                ';' => return Ok((&text[..i], Some(&text[i + 1..]))),
                '\\' => {
                    return Err(parse_error(
                        "stray-backslash",
                        "backslash outside a string (malformed line separator?)",
                    ))
                }
                _ => {}
            },
        }
    }
    if quote.is_some() {
        return Err(parse_error("unterminated-string", "string literal is not closed"));
    }
    Ok((text, None))
}

/// Top-level comma split, respecting quotes, brackets and parentheses.
fn split_operands(text: &str) -> Result<Vec<&str>, Diagnostic> {
    let mut out = Vec::new();
    let (mut depth_sq, mut depth_par) = (0i32, 0i32);
    let mut quote: Option<char> = None;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        if let Some(q) = quote {
            if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '\'' | '"' | '`' => quote = Some(c),
            '[' => depth_sq += 1,
            ']' => depth_sq -= 1,
            '(' => depth_par += 1,
            ')' => depth_par -= 1,
            ',' if depth_sq == 0 && depth_par == 0 => {
                out.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
        if depth_sq < 0 || depth_par < 0 {
            return Err(parse_error("unbalanced", "unbalanced brackets"));
        }
    }
    if depth_sq != 0 || depth_par != 0 {
        return Err(parse_error("unbalanced", "unbalanced brackets"));
    }
    out.push(&text[start..]);
    let out: Vec<&str> = out.into_iter().map(str::trim).collect();
    if out.iter().any(|o| o.is_empty()) {
        return Err(parse_error("empty-operand", "empty operand"));
    }
    Ok(out)
}

/// Byte offsets of whitespace-separated words.
fn words(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s, &text[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, &text[s..]));
    }
    out
}

fn leading_label(body: &str) -> Option<(&str, &str)> {
    let end = body.find(|c: char| c == ':' || c.is_whitespace())?;
    let name = &body[..end];
    let rest = body[end..].trim_start();
    let rest = rest.strip_prefix(':')?;
    if name.is_empty() || rest.starts_with(':') {
        return None;
    }
    Some((name, rest.trim_start()))
}

fn check_label(name: &str) -> Result<String, Diagnostic> {
    if !is_identifier(name) {
        return Err(parse_error("malformed-label", format!("`{name}` is not a valid label name")));
    }
    if is_reserved(name) {
        return Err(parse_error(
            "reserved-label",
            format!("`{name}` is a reserved word and cannot be a label"),
        ));
    }
    Ok(name.strip_prefix('$').unwrap_or(name).to_string())
}

fn is_known_word(word: &str) -> bool {
    let t = InstructionTable::builtin();
    t.is_instruction(word) || super::is_directive(word) || PREFIXES.contains(&word)
}

fn parse_operands(mnemonic: &str, text: &str) -> Result<Vec<Operand>, Diagnostic> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    if WORD_DIRECTIVES.contains(&mnemonic) {
        return Ok(text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|w| !w.is_empty())
            .map(|w| Operand::new(OperandKind::Name { text: w.to_string() }))
            .collect());
    }
    split_operands(text)?
        .into_iter()
        .map(|o| parse_operand(o).map_err(|e| parse_error("bad-operand", format!("operand `{o}`: {e}"))))
        .collect()
}

/// Parses one physical NASM line.
pub fn parse_line(text: &str) -> Result<SourceLine, Diagnostic> {
    if text.contains(['\n', '\r']) {
        return Err(parse_error("multiple-lines", "expected a single physical line"));
    }
    let (body, comment) = split_comment(text)?;
    let mut line = SourceLine {
        label: None,
        prefix: None,
        repeat: None,
        mnemonic: None,
        operands: Vec::new(),
        comment: comment.map(|c| c.trim().to_string()),
        raw: text.to_string(),
    };
    let mut body = body.trim();
    if body.is_empty() {
        return if line.comment.is_some() {
            Ok(line)
        } else {
            Err(parse_error("empty-line", "line is empty"))
        };
    }
    // Primitive directive form, e.g. `[bits 32]`.
    if let Some(inner) = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
        let first = inner.split_whitespace().next().unwrap_or("").to_lowercase();
        if super::is_directive(&first) {
            body = inner.trim();
        }
    }
    if let Some((name, rest)) = leading_label(body) {
        line.label = Some(check_label(name)?);
        body = rest;
        if body.is_empty() {
            return Ok(line);
        }
    }
    let mut ws = words(body);
    let first = ws[0].1.to_lowercase();
    if line.label.is_none() && !is_known_word(&first) {
        let second = ws.get(1).map(|(_, w)| w.to_lowercase());
        if second.as_deref().is_some_and(|w| DATA_DIRECTIVES.contains(&w)) {
            line.label = Some(check_label(ws[0].1)?);
            ws.remove(0);
        }
    }
    let mut idx = 0;
    let word_at = |i: usize| ws.get(i).map(|(_, w)| w.to_lowercase());
    if let Some(w) = word_at(idx).filter(|w| PREFIXES.contains(&w.as_str())) {
        line.prefix = Some(w);
        idx += 1;
        if idx >= ws.len() {
            return Err(parse_error("dangling-prefix", "prefix without an instruction"));
        }
    }
    if word_at(idx).as_deref() == Some("times") {
        let body_at = (idx + 1..ws.len())
            .find(|&i| i > idx + 1 && is_known_word(&ws[i].1.to_lowercase()))
            .ok_or_else(|| parse_error("malformed-times", "`times` needs a count and an instruction"))?;
        let count_text = &body[ws[idx + 1].0..ws[body_at].0];
        let count = parse_operand(count_text)
            .map_err(|e| parse_error("bad-operand", format!("times count `{}`: {e}", count_text.trim())))?;
        line.repeat = Some(count);
        idx = body_at;
    }
    let Some((offset, word)) = ws.get(idx).copied() else {
        return Ok(line);
    };
    let mnemonic = word.to_lowercase();
    if !mnemonic.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) || !mnemonic.chars().all(|c| c.is_ascii_alphanumeric()) {
        return Err(parse_error("malformed-line", format!("`{word}` is not a mnemonic")));
    }
    let rest = &body[offset + word.len()..];
    line.operands = parse_operands(&mnemonic, rest)?;
    line.mnemonic = Some(mnemonic);
    Ok(line)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::operand::{RegClass, SizeHint};

    #[test]
    fn instruction_with_memory() {
        let l = parse_line("mov bl, byte [edi]").unwrap();
        assert_eq!(l.mnemonic.as_deref(), Some("mov"));
        assert_eq!(l.operands.len(), 2);
        let r = l.operands[0].register().unwrap();
        assert_eq!((r.name.as_str(), r.width, r.class), ("bl", 8, RegClass::General));
        assert_eq!(l.operands[1].size, Some(SizeHint::Byte));
        assert_eq!(l.operands[1].memory().unwrap().base.as_deref(), Some("edi"));
    }

    #[test]
    fn labels() {
        let l = parse_line("_start:").unwrap();
        assert_eq!(l.label.as_deref(), Some("_start"));
        assert!(l.mnemonic.is_none());
        let l = parse_line("decoder: pop esi").unwrap();
        assert_eq!(l.label.as_deref(), Some("decoder"));
        assert_eq!(l.mnemonic.as_deref(), Some("pop"));
        let l = parse_line("msg db '/bin/sh', 0").unwrap();
        assert_eq!(l.label.as_deref(), Some("msg"));
        let l = parse_line("len equ $ - msg").unwrap();
        assert_eq!((l.label.as_deref(), l.mnemonic.as_deref()), (Some("len"), Some("equ")));
        let l = parse_line("IncAddr:").unwrap();
        assert_eq!(l.label.as_deref(), Some("IncAddr"));
    }

    #[test]
    fn reserved_label_is_error() {
        let e = parse_line("section:").unwrap_err();
        assert_eq!(e.code, "reserved-label");
        assert!(parse_line("eax:").is_err());
        assert!(parse_line("Mov:").is_err());
    }

    #[test]
    fn comments_and_case() {
        let l = parse_line("MOV EAX, 0x50905090 ; Move 0x50905090 into EAX").unwrap();
        assert_eq!(l.mnemonic.as_deref(), Some("mov"));
        assert_eq!(l.operands[0].register().unwrap().name, "eax");
        assert_eq!(l.comment.as_deref(), Some("Move 0x50905090 into EAX"));
        let l = parse_line("; just a note").unwrap();
        assert!(l.mnemonic.is_none() && l.comment.is_some());
        let l = parse_line("push ';'").unwrap();
        assert!(l.comment.is_none());
    }

    #[test]
    fn directives_and_prefixes() {
        let l = parse_line("section .text").unwrap();
        assert_eq!(l.operands.len(), 1);
        let l = parse_line("global _start").unwrap();
        assert_eq!(l.mnemonic.as_deref(), Some("global"));
        let l = parse_line("rep movsb").unwrap();
        assert_eq!((l.prefix.as_deref(), l.mnemonic.as_deref()), (Some("rep"), Some("movsb")));
        let l = parse_line("times 510-($-$$) db 0").unwrap();
        assert!(l.repeat.is_some());
        assert_eq!(l.mnemonic.as_deref(), Some("db"));
        let l = parse_line("[bits 32]").unwrap();
        assert_eq!(l.mnemonic.as_deref(), Some("bits"));
    }

    #[test]
    fn malformed_lines() {
        assert_eq!(parse_line("").unwrap_err().code, "empty-line");
        assert_eq!(parse_line("   ").unwrap_err().code, "empty-line");
        assert_eq!(parse_line("scasd \\ jnz _start").unwrap_err().code, "stray-backslash");
        assert_eq!(parse_line("mov eax,").unwrap_err().code, "empty-operand");
        assert_eq!(parse_line("db 'abc").unwrap_err().code, "unterminated-string");
        assert_eq!(parse_line("mov eax, [ebx").unwrap_err().code, "unbalanced");
        assert_eq!(parse_line("0x80").unwrap_err().code, "malformed-line");
        assert_eq!(parse_line("lock").unwrap_err().code, "dangling-prefix");
        assert!(parse_line("a\nb").is_err());
    }

    #[test]
    fn display_is_canonical() {
        let l = parse_line("  xor   ecx,ecx   ").unwrap();
        assert_eq!(l.to_string(), "xor ecx, ecx");
        let l = parse_line("decoder:pop esi;x").unwrap();
        assert_eq!(l.to_string(), "decoder: pop esi ; x");
    }
}
