//! NASM-style constant expressions: lexing, parsing and folding.

use super::operand::{parse_number, register_info};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Number { value: i64, text: String },
    Ident(String),
    Str(String),
    Here,
    SectionStart,
    Op(&'static str),
    Open,
    Close,
}

const OPERATORS: [&str; 15] = ["<<", ">>", "//", "%%", "+", "-", "*", "/", "%", "&", "|", "^", "~", "!", ":"];

pub(crate) fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || matches!(c, '_' | '.' | '?' | '@')
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '$' | '#' | '@' | '~' | '?')
}

/// Splits expression text into tokens. Errors carry a short reason.
pub fn lex(text: &str) -> Result<Vec<Token>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '(' {
            out.push(Token::Open);
            i += 1;
        } else if c == ')' {
            out.push(Token::Close);
            i += 1;
        } else if matches!(c, '\'' | '"' | '`') {
            let start = i;
            i += 1;
            while i < chars.len() && chars[i] != c {
                i += 1;
            }
            if i == chars.len() {
                return Err("unterminated string".into());
            }
            i += 1;
            out.push(Token::Str(chars[start..i].iter().collect()));
        } else if c == '$' {
            if chars.get(i + 1) == Some(&'$') {
                out.push(Token::SectionStart);
                i += 2;
            } else if chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                let start = i + 1;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().collect();
                let value = i64::from_str_radix(&digits, 16)
                    .map_err(|_| format!("malformed number `${digits}`"))?;
                out.push(Token::Number {
                    value,
                    text: chars[start - 1..i].iter().collect(),
                });
            } else if chars.get(i + 1).is_some_and(|&d| is_ident_start(d)) {
                let start = i;
                i += 1;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                out.push(Token::Ident(chars[start..i].iter().collect()));
            } else {
                out.push(Token::Here);
                i += 1;
            }
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let (value, _) = parse_number(&text).ok_or_else(|| format!("malformed number `{text}`"))?;
            out.push(Token::Number { value, text });
        } else if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else {
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            match OPERATORS.iter().find(|op| rest.starts_with(*op)) {
                Some(op) => {
                    out.push(Token::Op(op));
                    i += op.len();
                }
                None => return Err(format!("unexpected character `{c}`")),
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Num(i64),
    Sym(String),
    Reg(String),
    Str(String),
    Here,
    SectionStart,
    Unary(&'static str, Box<Expr>),
    Binary(&'static str, Box<Expr>, Box<Expr>),
}

fn precedence(op: &str) -> Option<u8> {
    Some(match op {
        "|" => 1,
        "^" => 2,
        "&" => 3,
        "<<" | ">>" => 4,
        "+" | "-" => 5,
        "*" | "/" | "%" | "//" | "%%" => 6,
        _ => return None,
    })
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn primary(&mut self) -> Result<Expr, String> {
        match self.next() {
            Some(Token::Number { value, .. }) => Ok(Expr::Num(value)),
            Some(Token::Str(s)) => Ok(Expr::Str(s)),
            Some(Token::Here) => Ok(Expr::Here),
            Some(Token::SectionStart) => Ok(Expr::SectionStart),
            Some(Token::Ident(name)) => {
                if let Some(stripped) = name.strip_prefix('$') {
                    Ok(Expr::Sym(stripped.to_string()))
                } else if register_info(&name.to_lowercase()).is_some() {
                    Ok(Expr::Reg(name.to_lowercase()))
                } else {
                    Ok(Expr::Sym(name))
                }
            }
            Some(Token::Op(op)) if matches!(op, "-" | "+" | "~" | "!") => {
                Ok(Expr::Unary(op, Box::new(self.primary()?)))
            }
            Some(Token::Open) => {
                let e = self.expr(0)?;
                match self.next() {
                    Some(Token::Close) => Ok(e),
                    _ => Err("unbalanced parenthesis".into()),
                }
            }
            Some(Token::Close) => Err("unbalanced parenthesis".into()),
            Some(Token::Op(op)) => Err(format!("unexpected operator `{op}`")),
            None => Err("expression ends early".into()),
        }
    }

    fn expr(&mut self, min_prec: u8) -> Result<Expr, String> {
        let mut lhs = self.primary()?;
        while let Some(Token::Op(op)) = self.peek() {
            let op = *op;
            let Some(prec) = precedence(op) else { break };
            if prec <= min_prec {
                break;
            }
            self.pos += 1;
            let rhs = self.expr(prec)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }
}

/// Parses a whole expression; trailing tokens are an error.
pub fn parse_expr(text: &str) -> Result<Expr, String> {
    let tokens = lex(text)?;
    if tokens.is_empty() {
        return Err("empty expression".into());
    }
    let mut p = Parser { tokens, pos: 0 };
    let e = p.expr(0)?;
    match p.peek() {
        None => Ok(e),
        Some(Token::Close) => Err("unbalanced parenthesis".into()),
        Some(t) => Err(format!("unexpected token {t:?}")),
    }
}

/// Little-endian value of a character constant, if it fits in 8 bytes.
pub fn char_constant(quoted: &str) -> Option<i64> {
    let inner = &quoted[1..quoted.len() - 1];
    if inner.len() > 8 {
        return None;
    }
    Some(
        inner
            .bytes()
            .rev()
            .fold(0u64, |acc, b| (acc << 8) | b as u64) as i64,
    )
}

impl Expr {
    /// Folds constant subtrees; `None` when symbols, registers or `$` remain.
    pub fn value(&self) -> Option<i64> {
        match self {
            Expr::Num(v) => Some(*v),
            Expr::Str(s) => char_constant(s),
            Expr::Sym(_) | Expr::Reg(_) | Expr::Here | Expr::SectionStart => None,
            Expr::Unary(op, e) => {
                let v = e.value()?;
                Some(match *op {
                    "-" => v.wrapping_neg(),
                    "~" => !v,
                    "!" => (v == 0) as i64,
                    _ => v,
                })
            }
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.value()?, b.value()?);
                Some(match *op {
                    "+" => a.wrapping_add(b),
                    "-" => a.wrapping_sub(b),
                    "*" => a.wrapping_mul(b),
                    "/" | "//" => a.checked_div(b)?,
                    "%" | "%%" => a.checked_rem(b)?,
                    "<<" => a.wrapping_shl(b as u32),
                    ">>" => a.wrapping_shr(b as u32),
                    "&" => a & b,
                    "|" => a | b,
                    "^" => a ^ b,
                    _ => return None,
                })
            }
        }
    }

    pub fn symbols(&self, out: &mut Vec<String>) {
        match self {
            Expr::Sym(s) => {
                if !out.contains(s) {
                    out.push(s.clone());
                }
            }
            Expr::Unary(_, e) => e.symbols(out),
            Expr::Binary(_, a, b) => {
                a.symbols(out);
                b.symbols(out);
            }
            _ => {}
        }
    }

    pub fn has_register(&self) -> bool {
        match self {
            Expr::Reg(_) => true,
            Expr::Unary(_, e) => e.has_register(),
            Expr::Binary(_, a, b) => a.has_register() || b.has_register(),
            _ => false,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Sym(s) | Expr::Reg(s) | Expr::Str(s) => f.write_str(s),
            Expr::Here => f.write_str("$"),
            Expr::SectionStart => f.write_str("$$"),
            Expr::Unary(op, e) => write!(f, "{op}{e}"),
            Expr::Binary(op, a, b) => write!(f, "({a}{op}{b})"),
        }
    }
}
