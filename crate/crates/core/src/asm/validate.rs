use super::line::{parse_line, SourceLine};
use super::operand::{MemoryRef, Operand, OperandKind, RegClass, SizeHint};
use super::table::{InstructionTable, OperandClass, Signature};
use super::{Diagnostic, Severity};
use crate::snippet;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};

/// Snippets are judged in isolation; programs must resolve every label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Snippet,
    Program,
}

/// Labels visible while validating a line.
#[derive(Debug, Clone)]
pub struct LabelContext {
    pub known: HashSet<String>,
    pub scope: Scope,
    /// Last non-local label, used to qualify `.local` references.
    pub parent: Option<String>,
}

impl LabelContext {
    pub fn new(scope: Scope) -> Self {
        LabelContext {
            known: HashSet::new(),
            scope,
            parent: None,
        }
    }

    fn qualify(&self, name: &str) -> String {
        qualify(self.parent.as_deref(), name)
    }
}

fn qualify(parent: Option<&str>, name: &str) -> String {
    match parent {
        Some(p) if name.starts_with('.') && !name.starts_with("..") => format!("{p}{name}"),
        _ => name.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnippetCheck {
    pub syntactically_correct: bool,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramCheck {
    pub compilable: bool,
    pub diagnostics: Vec<Diagnostic>,
}

fn fits(value: i64, bits: u16) -> bool {
    if bits >= 64 {
        return true;
    }
    let lo = -(1i128 << (bits - 1));
    let hi = (1i128 << bits) - 1;
    (lo..=hi).contains(&(value as i128))
}

fn check_memory(m: &MemoryRef, out: &mut Vec<Diagnostic>) {
    for reg in m.base.iter().chain(m.index.iter()) {
        let ok = super::register_info(reg).is_some_and(|r| r.class == RegClass::General && r.width == 32);
        if !ok {
            out.push(Diagnostic::error(
                "invalid-address-register",
                format!("`{reg}` cannot be used in an address; a 32-bit general register is required"),
            ));
        }
    }
    if !matches!(m.scale, 1 | 2 | 4 | 8) {
        out.push(Diagnostic::error("invalid-scale", format!("scale {} is not 1, 2, 4 or 8", m.scale)));
    }
    if m.index.as_deref() == Some("esp") {
        out.push(Diagnostic::error("invalid-index", "esp cannot be an index register"));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fit {
    No,
    Yes,
    /// Memory without a size hint where the class needs width `n`.
    Unsized(u16),
}

fn hint_bits(op: &Operand) -> Option<u16> {
    op.size.map(SizeHint::bits)
}

fn fit_operand(op: &Operand, class: OperandClass) -> Fit {
    if op.jump.is_some() && class != OperandClass::Rel {
        return Fit::No;
    }
    match (&op.kind, class) {
        (OperandKind::Register(r), _) => {
            if hint_bits(op).is_some_and(|b| b != r.width) {
                return Fit::No;
            }
            let ok = match class {
                OperandClass::Reg(w) | OperandClass::RegMem(w) => r.class == RegClass::General && r.width == w,
                OperandClass::Sreg => r.class == RegClass::Segment,
                OperandClass::Fpu => r.class == RegClass::Fpu,
                OperandClass::Mmx => r.class == RegClass::Mmx,
                OperandClass::Xmm => r.class == RegClass::Xmm,
                OperandClass::Fixed(name) => r.name == name,
                _ => false,
            };
            if ok {
                Fit::Yes
            } else {
                Fit::No
            }
        }
        (OperandKind::Memory(_), OperandClass::RegMem(w) | OperandClass::Mem(Some(w))) => match hint_bits(op) {
            Some(b) if b == w => Fit::Yes,
            Some(_) => Fit::No,
            None => Fit::Unsized(w),
        },
        (OperandKind::Memory(_), OperandClass::Mem(None)) => Fit::Yes,
        (OperandKind::Name { .. }, _) => Fit::No,
        (_, OperandClass::Rel) if op.is_immediate_like() => match hint_bits(op) {
            None | Some(16) | Some(32) => Fit::Yes,
            _ => Fit::No,
        },
        (_, OperandClass::Imm(w)) if op.is_immediate_like() => {
            if hint_bits(op).is_some_and(|b| b != w) {
                return Fit::No;
            }
            if let OperandKind::StringLiteral { text } = &op.kind {
                if (text.len() - 2) * 8 > w as usize {
                    return Fit::No;
                }
            }
            Fit::Yes
        }
        _ => Fit::No,
    }
}

/// Instructions whose unsized memory operand has an implied size.
const IMPLIED_SIZE: [&str; 2] = ["jmp", "call"];

fn signature_fits(mnemonic: &str, ops: &[Operand], sig: &Signature) -> Fit {
    let fits: Vec<Fit> = ops.iter().zip(sig).map(|(o, c)| fit_operand(o, *c)).collect();
    if fits.contains(&Fit::No) {
        return Fit::No;
    }
    for (i, f) in fits.iter().enumerate() {
        if let Fit::Unsized(w) = f {
            let sized_by_other = ops.iter().zip(sig).enumerate().any(|(j, (o, c))| {
                j != i && c.sizes_operation() && o.register().is_some_and(|r| r.width == *w)
            });
            if !sized_by_other && !IMPLIED_SIZE.contains(&mnemonic) {
                return Fit::Unsized(*w);
            }
        }
    }
    Fit::Yes
}

fn immediates_fit(ops: &[Operand], sig: &Signature) -> bool {
    ops.iter().zip(sig).all(|(o, c)| match (c, o.constant()) {
        (OperandClass::Imm(w), Some(v)) => fits(v, *w),
        _ => true,
    })
}

fn describe(ops: &[Operand]) -> String {
    ops.iter().map(Operand::to_string).collect::<Vec<_>>().join(", ")
}

fn validate_instruction(line: &SourceLine, mnemonic: &str, sigs: &[Signature], out: &mut Vec<Diagnostic>) {
    let ops = &line.operands;
    let mut shape_errors = false;
    for op in ops {
        if let OperandKind::Memory(m) = &op.kind {
            let before = out.len();
            check_memory(m, out);
            shape_errors |= out.len() > before;
        }
        if let OperandKind::Name { text } = &op.kind {
            out.push(Diagnostic::error("bad-operand", format!("`{text}` is not an operand")));
            shape_errors = true;
        }
    }
    if shape_errors {
        return;
    }
    let same_arity: Vec<&Signature> = sigs.iter().filter(|s| s.len() == ops.len()).collect();
    if same_arity.is_empty() {
        let mut counts: Vec<usize> = sigs.iter().map(Vec::len).collect();
        counts.sort_unstable();
        counts.dedup();
        let expected = counts.iter().map(usize::to_string).collect::<Vec<_>>().join(" or ");
        out.push(Diagnostic::error(
            "operand-count",
            format!("`{mnemonic}` takes {expected} operand(s), got {}", ops.len()),
        ));
        return;
    }
    let verdicts: Vec<(Fit, &Signature)> = same_arity.iter().map(|s| (signature_fits(mnemonic, ops, s), *s)).collect();
    let matching: Vec<&Signature> = verdicts.iter().filter(|(f, _)| *f == Fit::Yes).map(|(_, s)| *s).collect();
    if !matching.is_empty() {
        if !matching.iter().any(|s| immediates_fit(ops, s)) {
            out.push(Diagnostic::warning(
                "immediate-overflow",
                format!("immediate does not fit the operand size in `{mnemonic} {}`", describe(ops)),
            ));
        }
        return;
    }
    if verdicts.iter().any(|(f, _)| matches!(f, Fit::Unsized(_))) {
        out.push(Diagnostic::error(
            "size-not-specified",
            format!("operation size not specified in `{mnemonic} {}`", describe(ops)),
        ));
        return;
    }
    let imm_dest_allowed = sigs
        .iter()
        .any(|s| matches!(s.first(), Some(OperandClass::Imm(_) | OperandClass::Rel)));
    if ops.len() == 2 && ops[0].is_immediate_like() && !imm_dest_allowed {
        out.push(Diagnostic::error(
            "immediate-destination",
            format!("destination of `{mnemonic}` cannot be an immediate or label value (`{}`)", ops[0]),
        ));
        return;
    }
    let gp_widths: Vec<u16> = ops
        .iter()
        .filter_map(|o| o.register().filter(|r| r.class == RegClass::General).map(|r| r.width))
        .collect();
    if gp_widths.len() >= 2 && gp_widths.windows(2).any(|w| w[0] != w[1]) {
        out.push(Diagnostic::error(
            "operand-size-mismatch",
            format!("mismatched register sizes in `{mnemonic} {}`", describe(ops)),
        ));
        return;
    }
    out.push(Diagnostic::error(
        "invalid-operands",
        format!("invalid combination of operands for `{mnemonic}`: {}", describe(ops)),
    ));
}

fn check_data_operand(op: &Operand, bits: u16, out: &mut Vec<Diagnostic>) {
    if op.size.is_some() || op.jump.is_some() {
        out.push(Diagnostic::error("bad-operand", format!("size keyword not allowed in data: `{op}`")));
        return;
    }
    match &op.kind {
        OperandKind::Register(_) | OperandKind::Memory(_) | OperandKind::Name { .. } => {
            out.push(Diagnostic::error("invalid-data", format!("`{op}` is not a data value")));
        }
        OperandKind::StringLiteral { .. } => {}
        _ => {
            if let Some(v) = op.constant() {
                if !fits(v, bits) {
                    out.push(Diagnostic::warning(
                        "immediate-overflow",
                        format!("value `{op}` does not fit in {bits} bits"),
                    ));
                }
            }
        }
    }
}

fn expect_count(mnemonic: &str, ops: &[Operand], range: std::ops::RangeInclusive<usize>, out: &mut Vec<Diagnostic>) -> bool {
    if range.contains(&ops.len()) {
        return true;
    }
    out.push(Diagnostic::error(
        "operand-count",
        format!(
            "`{mnemonic}` takes {}..={} operand(s), got {}",
            range.start(),
            range.end(),
            ops.len()
        ),
    ));
    false
}

fn expect_value(op: &Operand, what: &str, out: &mut Vec<Diagnostic>) {
    if !op.is_immediate_like() || op.size.is_some() {
        out.push(Diagnostic::error("bad-operand", format!("{what} must be a value, got `{op}`")));
    }
}

fn validate_directive(line: &SourceLine, directive: &str, out: &mut Vec<Diagnostic>) {
    let ops = &line.operands;
    match directive {
        "global" | "extern" | "cpu" | "default" => {
            expect_count(directive, ops, 1..=usize::MAX, out);
        }
        "section" | "segment" => {
            if expect_count(directive, ops, 1..=usize::MAX, out) {
                if let OperandKind::Name { text } = &ops[0].kind {
                    if text.contains('=') {
                        out.push(Diagnostic::error("bad-operand", format!("`{text}` is not a section name")));
                    }
                }
            }
        }
        "db" | "dw" | "dd" | "dq" | "dt" => {
            let bits = match directive {
                "db" => 8,
                "dw" => 16,
                "dd" => 32,
                "dq" => 64,
                _ => 80,
            };
            if expect_count(directive, ops, 1..=usize::MAX, out) {
                for op in ops {
                    check_data_operand(op, bits, out);
                }
            }
        }
        "equ" => {
            if line.label.is_none() {
                out.push(Diagnostic::error("equ-without-label", "`equ` needs a label"));
            }
            if expect_count(directive, ops, 1..=1, out) {
                expect_value(&ops[0], "`equ` value", out);
            }
        }
        "resb" | "resw" | "resd" | "resq" | "rest" | "org" => {
            if expect_count(directive, ops, 1..=1, out) {
                expect_value(&ops[0], "count", out);
            }
        }
        "align" => {
            if expect_count(directive, ops, 1..=2, out) {
                expect_value(&ops[0], "alignment", out);
            }
        }
        "bits" => {
            if expect_count(directive, ops, 1..=1, out) && !matches!(ops[0].constant(), Some(16 | 32 | 64)) {
                out.push(Diagnostic::error("bad-operand", format!("`bits {}` is not 16, 32 or 64", ops[0])));
            }
        }
        "use32" => {
            expect_count(directive, ops, 0..=0, out);
        }
        _ => out.push(Diagnostic::error(
            "malformed-times",
            format!("`{directive}` needs a count and an instruction"),
        )),
    }
}

fn referenced_symbols(line: &SourceLine) -> Vec<String> {
    let mut out = Vec::new();
    for op in line.repeat.iter().chain(line.operands.iter()) {
        for s in op.symbols() {
            if s != "?" && !out.contains(&s) {
                out.push(s);
            }
        }
    }
    out
}

/// Checks one parsed line. Returns an empty list iff the line would assemble.
pub fn validate_line(line: &SourceLine, table: &InstructionTable, ctx: &LabelContext) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if let Some(count) = &line.repeat {
        expect_value(count, "`times` count", &mut out);
    }
    match line.mnemonic.as_deref() {
        None => {}
        Some(m) if table.is_directive(m) => validate_directive(line, m, &mut out),
        Some(m) => match table.signatures(m) {
            Some(sigs) => validate_instruction(line, m, sigs, &mut out),
            None => out.push(Diagnostic::error("unknown-mnemonic", format!("unknown instruction `{m}`"))),
        },
    }
    for sym in referenced_symbols(line) {
        if !ctx.known.contains(&ctx.qualify(&sym)) && !ctx.known.contains(&sym) {
            let message = format!("label `{sym}` is not defined");
            out.push(match ctx.scope {
                Scope::Program => Diagnostic::error("unresolved-label", message),
                Scope::Snippet => Diagnostic::warning("unresolved-label", message),
            });
        }
    }
    out
}

struct Parsed {
    line_no: usize,
    line: Result<SourceLine, Diagnostic>,
}

fn parse_all<'a>(texts: impl Iterator<Item = &'a str>) -> Vec<Parsed> {
    texts
        .enumerate()
        .map(|(i, t)| Parsed {
            line_no: i + 1,
            line: parse_line(t),
        })
        .collect()
}

/// First pass: label definitions (qualified), `equ` names and externs.
fn collect_labels(parsed: &[Parsed], diagnostics: &mut Vec<Diagnostic>) -> HashSet<String> {
    let mut defined: BTreeMap<String, usize> = BTreeMap::new();
    let mut parent: Option<String> = None;
    let mut known = HashSet::new();
    for p in parsed {
        let Ok(line) = &p.line else { continue };
        if let Some(label) = &line.label {
            let full = qualify(parent.as_deref(), label);
            if !label.starts_with('.') {
                parent = Some(label.clone());
            }
            if let Some(first) = defined.insert(full.clone(), p.line_no) {
                diagnostics.push(
                    Diagnostic::error(
                        "duplicate-label",
                        format!("label `{full}` redefined (first defined on line {first})"),
                    )
                    .at(p.line_no),
                );
            }
            known.insert(full);
        }
        if line.mnemonic.as_deref() == Some("extern") {
            for op in &line.operands {
                if let OperandKind::Name { text } = &op.kind {
                    known.insert(text.split(':').next().unwrap_or(text).to_string());
                }
            }
        }
    }
    known
}

fn check_lines(parsed: &[Parsed], table: &InstructionTable, scope: Scope) -> Vec<Diagnostic> {
    let mut diagnostics = Vec::new();
    let known = collect_labels(parsed, &mut diagnostics);
    let mut ctx = LabelContext {
        known,
        scope,
        parent: None,
    };
    for p in parsed {
        match &p.line {
            Err(d) => diagnostics.push(d.clone().at(p.line_no)),
            Ok(line) => {
                if let Some(label) = line.label.as_ref().filter(|l| !l.starts_with('.')) {
                    ctx.parent = Some(label.clone());
                }
                diagnostics.extend(validate_line(line, table, &ctx).into_iter().map(|d| d.at(p.line_no)));
            }
        }
    }
    diagnostics.sort_by_key(|d| d.line_no);
    diagnostics
}

/// A snippet is syntactically correct iff every physical line parses and
/// validates without errors; labels it does not define only warn.
pub fn validate_snippet_with(text: &str, table: &InstructionTable) -> SnippetCheck {
    let lines = snippet::physical_lines(text);
    if lines.is_empty() {
        return SnippetCheck {
            syntactically_correct: false,
            diagnostics: vec![Diagnostic::error("empty-snippet", "snippet is empty")],
        };
    }
    let diagnostics = check_lines(&parse_all(lines.into_iter()), table, Scope::Snippet);
    SnippetCheck {
        syntactically_correct: !diagnostics.iter().any(Diagnostic::is_error),
        diagnostics,
    }
}

pub fn validate_snippet(text: &str) -> SnippetCheck {
    validate_snippet_with(text, InstructionTable::builtin())
}

/// Two-pass check of a whole program given as its ordered snippets.
pub fn validate_program_with<S: AsRef<str>>(snippets: &[S], table: &InstructionTable) -> ProgramCheck {
    let lines: Vec<&str> = snippets
        .iter()
        .flat_map(|s| snippet::physical_lines(s.as_ref()))
        .collect();
    if lines.is_empty() {
        return ProgramCheck {
            compilable: false,
            diagnostics: vec![Diagnostic::error("empty-program", "program has no lines")],
        };
    }
    let diagnostics = check_lines(&parse_all(lines.into_iter()), table, Scope::Program);
    ProgramCheck {
        compilable: !diagnostics.iter().any(|d| d.severity == Severity::Error),
        diagnostics,
    }
}

pub fn validate_program<S: AsRef<str>>(snippets: &[S]) -> ProgramCheck {
    validate_program_with(snippets, InstructionTable::builtin())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn errors(text: &str) -> Vec<String> {
        validate_snippet(text)
            .diagnostics
            .into_iter()
            .filter(Diagnostic::is_error)
            .map(|d| d.code)
            .collect()
    }

    #[test]
    fn accepts_common_forms() {
        for ok in [
            "mov bl, byte [edi]",
            "xor [ecx + 116], dh",
            "mov dword [esp-4], esi",
            "int 0x80h",
            "push byte 0x43",
            "push long 0x68732f2f",
            "push word 0644o",
            "mov cx, 2001",
            "lea ecx, [esp]",
            "jmp short decode",
            "jmp edi",
            "call [eax]",
            "shl eax, 4",
            "movzx eax, byte [esi]",
            "fnstenv [esp-0xc]",
            "rep movsb",
            "db 0x32, 0x51,0x30",
            "msg db '/bin/sh', 0",
            "push '//sh'",
            "section .text",
            "global _start",
            "out dx, al",
        ] {
            assert!(errors(ok).is_empty(), "{ok}: {:?}", validate_snippet(ok).diagnostics);
        }
    }

    #[test]
    fn rejects_illegal_forms() {
        let cases = [
            ("xor ecx, [dh]", "invalid-address-register"),
            ("xor 0xfff, cx", "immediate-destination"),
            ("mov var3, esp", "immediate-destination"),
            ("mov eax, bx", "operand-size-mismatch"),
            ("inc [eax]", "size-not-specified"),
            ("mov [eax], 1", "size-not-specified"),
            ("scasd eax", "operand-count"),
            ("frobnicate eax", "unknown-mnemonic"),
            ("mov eax, [esp*2]", "invalid-index"),
            ("mov eax, [ebx+ecx*3]", "invalid-scale"),
            ("mov byte eax, 1", "invalid-operands"),
            ("len equ", "operand-count"),
            ("db eax", "invalid-data"),
        ];
        for (text, code) in cases {
            let errs = errors(text);
            assert!(errs.iter().any(|c| c == code), "{text}: {errs:?}");
        }
    }

    #[test]
    fn unresolved_labels_by_scope() {
        let s = validate_snippet("jnz _start");
        assert!(s.syntactically_correct);
        assert_eq!(s.diagnostics[0].severity, Severity::Warning);
        let p = validate_program(&["jnz _start"]);
        assert!(!p.compilable);
        assert_eq!(p.diagnostics[0].code, "unresolved-label");
        assert!(validate_program(&["_start:", "jnz _start"]).compilable);
    }

    #[test]
    fn local_labels_and_duplicates() {
        let ok = validate_program(&["a:", ".loop: dec ecx", "jnz .loop", "b:", ".loop: nop", "jmp .loop"]);
        assert!(ok.compilable, "{:?}", ok.diagnostics);
        let dup = validate_program(&["a:", "a:"]);
        assert_eq!(dup.diagnostics[0].code, "duplicate-label");
    }

    #[test]
    fn immediate_overflow_warns() {
        let s = validate_snippet("mov al, 0x1ff");
        assert!(s.syntactically_correct);
        assert_eq!(s.diagnostics[0].code, "immediate-overflow");
    }

    #[test]
    fn empty_and_multiline() {
        assert!(!validate_snippet("").syntactically_correct);
        assert!(validate_snippet("scasd\\njnz _start").syntactically_correct);
        assert!(!validate_snippet("scasd \\\\ jnz _start\\njmp edi").syntactically_correct);
        let bad = validate_snippet("cmp al, cl\\nmov eax, bl\\njmp x");
        assert!(!bad.syntactically_correct);
        assert_eq!(bad.diagnostics.iter().find(|d| d.is_error()).unwrap().line_no, 2);
    }

    #[test]
    fn directive_only_program() {
        assert!(validate_program(&["global _start"]).compilable);
        assert!(validate_program(&["extern printf", "call printf"]).compilable);
        assert!(validate_program(&["msg db 'hi'", "len equ $ - msg", "mov edx, len"]).compilable);
    }
}
