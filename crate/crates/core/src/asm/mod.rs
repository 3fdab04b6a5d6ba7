//! NASM-subset front end for 32-bit x86.
//!
//! [`parse_line`] splits a physical line into label, mnemonic, operands and
//! comment. [`validate_snippet`] and [`validate_program`] check parsed lines
//! against a closed [`InstructionTable`] and report [`Diagnostic`]s; a line
//! with no error-severity diagnostics is considered assemblable.

mod expr;
mod line;
mod operand;
mod system;
mod table;
mod validate;

pub use line::{parse_line, SourceLine};
pub use operand::{
    is_register, parse_number, parse_operand, register_info, AddrTerm, JumpHint, MemoryRef, Operand,
    OperandKind, Radix, RegClass, Register, SizeHint,
};
pub use system::{AssemblerError, SystemAssembler, SystemVerdict};
pub use table::{InstructionTable, OperandClass, Signature, TableError};
pub use validate::{
    validate_line, validate_program, validate_program_with, validate_snippet, validate_snippet_with,
    LabelContext, ProgramCheck, Scope, SnippetCheck,
};

use serde::{Deserialize, Serialize};
use std::fmt;

/// Directives understood by the validator.
pub const DIRECTIVES: [&str; 22] = [
    "global", "extern", "section", "segment", "db", "dw", "dd", "dq", "dt", "equ", "resb", "resw",
    "resd", "resq", "rest", "bits", "align", "times", "org", "use32", "cpu", "default",
];

/// Directives whose first word may be preceded by a label without a colon.
pub(crate) const DATA_DIRECTIVES: [&str; 12] = [
    "db", "dw", "dd", "dq", "dt", "equ", "resb", "resw", "resd", "resq", "rest", "times",
];

pub const PREFIXES: [&str; 6] = ["rep", "repe", "repz", "repne", "repnz", "lock"];

pub fn is_directive(word: &str) -> bool {
    DIRECTIVES.contains(&word.to_lowercase().as_str())
}

/// Mnemonics, directives, prefixes, registers and size keywords cannot be labels.
pub fn is_reserved(word: &str) -> bool {
    let w = word.to_lowercase();
    is_directive(&w)
        || PREFIXES.contains(&w.as_str())
        || operand::SIZE_KEYWORDS.contains(&w.as_str())
        || register_info(&w).is_some()
        || InstructionTable::builtin().is_instruction(&w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: String,
    pub message: String,
    /// 1-based physical line within the checked unit; 0 when not applicable.
    pub line_no: usize,
}

impl Diagnostic {
    pub fn error(code: &str, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code: code.to_string(),
            message: message.into(),
            line_no: 0,
        }
    }

    pub fn warning(code: &str, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            code: code.to_string(),
            message: message.into(),
            line_no: 0,
        }
    }

    pub fn at(mut self, line_no: usize) -> Self {
        self.line_no = line_no;
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        if self.line_no > 0 {
            write!(f, "line {}: ", self.line_no)?;
        }
        write!(f, "{sev}[{}]: {}", self.code, self.message)
    }
}
