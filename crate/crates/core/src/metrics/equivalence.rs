//! Conservative rule-based semantic equivalence.
//!
//! Rules, applied to each parsed line before comparison:
//! - condition-code aliases (`jz`/`je`, `jnz`/`jne`, `setz`/`sete`, ...)
//! - numeric literals compared by value, whatever the radix
//! - size hints dropped when a register operand fixes the width
//! - `push` of an immediate ignores `dword`/`long`, and `byte` when the value
//!   fits a signed byte
//! - jump distance hints and `strict` ignored
//! - operand order ignored for `test` and `xchg`
//!
//! Anything the rules cannot decide is [`Equivalence::Unknown`].

use crate::asm::{parse_line, validate_snippet, MemoryRef, Operand, OperandKind, SizeHint, SourceLine};
use crate::snippet;
use crate::translator::canonicalize_snippet;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equivalence {
    Equivalent,
    NotEquivalent,
    Unknown,
}

const ALIASES: [(&str, &str); 30] = [
    ("jz", "je"),
    ("jnz", "jne"),
    ("jc", "jb"),
    ("jnae", "jb"),
    ("jnc", "jae"),
    ("jnb", "jae"),
    ("jna", "jbe"),
    ("jnbe", "ja"),
    ("jnge", "jl"),
    ("jnl", "jge"),
    ("jng", "jle"),
    ("jnle", "jg"),
    ("jpe", "jp"),
    ("jpo", "jnp"),
    ("setz", "sete"),
    ("setnz", "setne"),
    ("setc", "setb"),
    ("setnae", "setb"),
    ("setnc", "setae"),
    ("setnb", "setae"),
    ("cmovz", "cmove"),
    ("cmovnz", "cmovne"),
    ("cmovc", "cmovb"),
    ("cmovnae", "cmovb"),
    ("cmovnc", "cmovae"),
    ("cmovnb", "cmovae"),
    ("loopz", "loope"),
    ("loopnz", "loopne"),
    ("repz", "repe"),
    ("repnz", "repne"),
];

const COMMUTATIVE: [&str; 2] = ["test", "xchg"];

/// Mnemonics whose size hint is part of the operation even with a register.
const SIZE_SENSITIVE: [&str; 2] = ["movzx", "movsx"];

fn canonical_mnemonic(m: &str) -> String {
    let m = m.to_lowercase();
    ALIASES
        .iter()
        .find(|(alias, _)| *alias == m)
        .map_or(m.clone(), |(_, canon)| canon.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Value {
    Reg(String),
    Imm(i64),
    Mem {
        segment: Option<String>,
        base: Option<String>,
        index: Option<String>,
        scale: u8,
        displacement: i64,
        terms: Vec<(bool, String)>,
    },
    Symbol(String),
    Text(String),
}

impl Value {
    fn is_symbolic(&self) -> bool {
        match self {
            Value::Symbol(_) | Value::Text(_) => true,
            Value::Mem { terms, .. } => !terms.is_empty(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct NormOperand {
    bits: Option<u16>,
    far: bool,
    value: Value,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct NormLine {
    label: Option<String>,
    prefix: Option<String>,
    repeat: Option<NormOperand>,
    mnemonic: Option<String>,
    operands: Vec<NormOperand>,
}

fn memory_value(m: &MemoryRef) -> Value {
    Value::Mem {
        segment: m.segment.as_ref().map(|s| s.to_lowercase()),
        base: m.base.as_ref().map(|s| s.to_lowercase()),
        index: m.index.as_ref().map(|s| s.to_lowercase()),
        scale: if m.index.is_some() { m.scale } else { 1 },
        displacement: m.displacement,
        terms: m.terms.iter().map(|t| (t.negative, t.text.replace(' ', ""))).collect(),
    }
}

fn operand_value(op: &Operand) -> Value {
    if let Some(v) = op.constant() {
        return Value::Imm(v);
    }
    match &op.kind {
        OperandKind::Register(r) => Value::Reg(r.name.to_lowercase()),
        OperandKind::Memory(m) => memory_value(m),
        OperandKind::LabelRef { name } => Value::Symbol(name.clone()),
        OperandKind::Expression { text, .. } => Value::Text(text.replace(' ', "")),
        OperandKind::StringLiteral { text } | OperandKind::Name { text } => Value::Text(text.clone()),
        OperandKind::Immediate { value, .. } => Value::Imm(*value),
    }
}

fn fits_signed(value: i64, bits: u16) -> bool {
    let lo = -(1i64 << (bits - 1));
    let hi = (1i64 << (bits - 1)) - 1;
    (lo..=hi).contains(&value)
}

fn normalize_operand(mnemonic: &str, ops: &[Operand], i: usize) -> NormOperand {
    let op = &ops[i];
    let value = operand_value(op);
    let mut bits = op.size.map(SizeHint::bits);
    if let Some(b) = bits {
        let reg_widths: Vec<u16> = ops
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .filter_map(|(_, o)| o.register().map(|r| r.width))
            .collect();
        let drop = match &value {
            _ if SIZE_SENSITIVE.contains(&mnemonic) => false,
            Value::Imm(v) if mnemonic == "push" => b == 32 || (b == 8 && fits_signed(*v, 8)),
            Value::Imm(v) => reg_widths.iter().any(|&w| b >= w || fits_signed(*v, b)),
            Value::Mem { .. } => reg_widths.contains(&b),
            _ => false,
        };
        if drop {
            bits = None;
        }
    }
    NormOperand {
        bits,
        far: op.jump == Some(crate::asm::JumpHint::Far),
        value,
    }
}

fn normalize(line: &SourceLine) -> NormLine {
    let mnemonic = line.mnemonic.as_deref().map(canonical_mnemonic);
    let m = mnemonic.as_deref().unwrap_or("");
    let mut operands: Vec<NormOperand> = (0..line.operands.len())
        .map(|i| normalize_operand(m, &line.operands, i))
        .collect();
    if COMMUTATIVE.contains(&m) {
        operands.sort();
    }
    NormLine {
        label: line.label.clone(),
        prefix: line.prefix.as_deref().map(canonical_mnemonic),
        repeat: line.repeat.as_ref().map(|r| NormOperand {
            bits: None,
            far: false,
            value: operand_value(r),
        }),
        mnemonic,
        operands,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LineVerdict {
    Same,
    Different,
    Unknown,
}

fn compare(pred: &NormLine, reference: &NormLine) -> LineVerdict {
    if pred == reference {
        return LineVerdict::Same;
    }
    let structural = pred.label == reference.label
        && pred.prefix == reference.prefix
        && pred.repeat == reference.repeat
        && pred.mnemonic.is_some()
        && pred.mnemonic == reference.mnemonic
        && pred.operands.len() == reference.operands.len();
    if !structural {
        return LineVerdict::Unknown;
    }
    let mut a = pred.operands.clone();
    let mut b = reference.operands.clone();
    a.sort();
    b.sort();
    if a == b {
        // same operands in another order on a non-commutative instruction
        return LineVerdict::Different;
    }
    let symbolic = pred
        .operands
        .iter()
        .zip(&reference.operands)
        .filter(|(x, y)| x != y)
        .any(|(x, y)| x.value.is_symbolic() || y.value.is_symbolic());
    if symbolic {
        LineVerdict::Unknown
    } else {
        LineVerdict::Different
    }
}

fn parse_all(text: &str) -> Option<Vec<NormLine>> {
    snippet::physical_lines(text)
        .into_iter()
        .map(|l| parse_line(l).ok().map(|sl| normalize(&sl)))
        .collect()
}

/// Compares a predicted snippet with its reference under the rule set.
pub fn semantic_equivalence_check(prediction: &str, reference: &str) -> Equivalence {
    let pred_canon = canonicalize_snippet(prediction);
    let ref_canon = canonicalize_snippet(reference);
    if pred_canon == ref_canon && !pred_canon.is_empty() {
        return Equivalence::Equivalent;
    }
    if !validate_snippet(&pred_canon).syntactically_correct || !validate_snippet(&ref_canon).syntactically_correct {
        return Equivalence::NotEquivalent;
    }
    let (Some(pred), Some(reference)) = (parse_all(&pred_canon), parse_all(&ref_canon)) else {
        return Equivalence::NotEquivalent;
    };
    if pred.len() != reference.len() {
        return Equivalence::Unknown;
    }
    let verdicts: Vec<LineVerdict> = pred.iter().zip(&reference).map(|(p, r)| compare(p, r)).collect();
    if verdicts.iter().all(|v| *v == LineVerdict::Same) {
        Equivalence::Equivalent
    } else if verdicts.contains(&LineVerdict::Unknown) {
        Equivalence::Unknown
    } else {
        Equivalence::NotEquivalent
    }
}
