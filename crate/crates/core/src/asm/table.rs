use super::{DIRECTIVES, PREFIXES};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;
use thiserror::Error;

const DEFAULT_TABLE: &str = include_str!("../../data/instruction_table.json");

#[derive(Debug, Error)]
pub enum TableError {
    #[error("failed to read instruction table {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed instruction table: {0}")]
    Json(#[from] serde_json::Error),
    #[error("`{mnemonic}`: unknown operand class `{class}`")]
    UnknownClass { mnemonic: String, class: String },
    #[error("duplicate mnemonic `{0}`")]
    DuplicateMnemonic(String),
    #[error("directive `{0}` is not supported")]
    UnsupportedDirective(String),
    #[error("`{0}` is listed both as an instruction and as a directive")]
    InstructionDirectiveClash(String),
}

/// What a signature position accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperandClass {
    /// General register of the given width.
    Reg(u16),
    /// General register or memory of the given width.
    RegMem(u16),
    /// Memory of the given width; `None` accepts any size and never needs a hint.
    Mem(Option<u16>),
    Imm(u16),
    /// Jump or call target.
    Rel,
    Sreg,
    Fpu,
    Mmx,
    Xmm,
    /// One specific register (`al`, `ax`, `eax`, `cl`, `dx`).
    Fixed(&'static str),
}

impl OperandClass {
    pub fn parse(text: &str) -> Option<Self> {
        Some(match text {
            "r8" => OperandClass::Reg(8),
            "r16" => OperandClass::Reg(16),
            "r32" => OperandClass::Reg(32),
            "rm8" => OperandClass::RegMem(8),
            "rm16" => OperandClass::RegMem(16),
            "rm32" => OperandClass::RegMem(32),
            "m" => OperandClass::Mem(None),
            "m8" => OperandClass::Mem(Some(8)),
            "m16" => OperandClass::Mem(Some(16)),
            "m32" => OperandClass::Mem(Some(32)),
            "m64" => OperandClass::Mem(Some(64)),
            "m80" => OperandClass::Mem(Some(80)),
            "m128" => OperandClass::Mem(Some(128)),
            "imm8" => OperandClass::Imm(8),
            "imm16" => OperandClass::Imm(16),
            "imm32" => OperandClass::Imm(32),
            "rel" => OperandClass::Rel,
            "sreg" => OperandClass::Sreg,
            "fpu" => OperandClass::Fpu,
            "mm" => OperandClass::Mmx,
            "xmm" => OperandClass::Xmm,
            "al" => OperandClass::Fixed("al"),
            "ax" => OperandClass::Fixed("ax"),
            "eax" => OperandClass::Fixed("eax"),
            "cl" => OperandClass::Fixed("cl"),
            "dx" => OperandClass::Fixed("dx"),
            _ => return None,
        })
    }

    /// Width of the memory this class would address, if it needs one.
    pub fn memory_width(self) -> Option<u16> {
        match self {
            OperandClass::RegMem(w) => Some(w),
            OperandClass::Mem(w) => w,
            _ => None,
        }
    }

    /// Whether a register matched against this class fixes the operation size.
    pub fn sizes_operation(self) -> bool {
        matches!(
            self,
            OperandClass::Reg(_)
                | OperandClass::RegMem(_)
                | OperandClass::Mmx
                | OperandClass::Xmm
                | OperandClass::Sreg
                | OperandClass::Fixed("al" | "ax" | "eax")
        )
    }
}

pub type Signature = Vec<OperandClass>;

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct TableFile {
    #[serde(default)]
    version: Option<String>,
    directives: Vec<String>,
    instructions: Vec<EntryFile>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct EntryFile {
    mnemonic: String,
    signatures: Vec<String>,
}

/// Closed table of mnemonics and their legal operand signatures.
#[derive(Debug, Clone)]
pub struct InstructionTable {
    version: Option<String>,
    entries: BTreeMap<String, Vec<Signature>>,
    directives: Vec<String>,
}

impl InstructionTable {
    /// The table bundled with the crate.
    pub fn builtin() -> &'static InstructionTable {
        static TABLE: OnceLock<InstructionTable> = OnceLock::new();
        TABLE.get_or_init(|| InstructionTable::from_json(DEFAULT_TABLE).expect("bundled table is valid"))
    }

    pub fn load(path: &Path) -> Result<Self, TableError> {
        let text = std::fs::read_to_string(path).map_err(|source| TableError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, TableError> {
        let file: TableFile = serde_json::from_str(text)?;
        let mut entries = BTreeMap::new();
        for entry in file.instructions {
            let mnemonic = entry.mnemonic.to_lowercase();
            let mut sigs = Vec::with_capacity(entry.signatures.len());
            for sig in &entry.signatures {
                let classes = sig
                    .split(',')
                    .map(str::trim)
                    .filter(|c| !c.is_empty())
                    .map(|c| {
                        OperandClass::parse(c).ok_or_else(|| TableError::UnknownClass {
                            mnemonic: mnemonic.clone(),
                            class: c.to_string(),
                        })
                    })
                    .collect::<Result<Signature, _>>()?;
                sigs.push(classes);
            }
            if entries.insert(mnemonic.clone(), sigs).is_some() {
                return Err(TableError::DuplicateMnemonic(mnemonic));
            }
        }
        let mut directives = Vec::new();
        for d in file.directives {
            let d = d.to_lowercase();
            if !DIRECTIVES.contains(&d.as_str()) {
                return Err(TableError::UnsupportedDirective(d));
            }
            if entries.contains_key(&d) {
                return Err(TableError::InstructionDirectiveClash(d));
            }
            directives.push(d);
        }
        Ok(InstructionTable {
            version: file.version,
            entries,
            directives,
        })
    }

    pub fn version(&self) -> Option<&str> {
        self.version.as_deref()
    }

    pub fn signatures(&self, mnemonic: &str) -> Option<&[Signature]> {
        self.entries.get(mnemonic).map(Vec::as_slice)
    }

    pub fn is_instruction(&self, mnemonic: &str) -> bool {
        self.entries.contains_key(mnemonic)
    }

    pub fn is_directive(&self, word: &str) -> bool {
        self.directives.iter().any(|d| d == word)
    }

    pub fn is_prefix(&self, word: &str) -> bool {
        PREFIXES.contains(&word)
    }

    pub fn mnemonics(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_loads() {
        let t = InstructionTable::builtin();
        assert!(t.len() > 52);
        for m in ["mov", "push", "cmp", "xor", "jmp", "scasd", "int", "jz", "je", "loop", "fnstenv"] {
            assert!(t.is_instruction(m), "{m}");
        }
        for d in ["global", "section", "db", "dw", "dd", "equ"] {
            assert!(t.is_directive(d), "{d}");
        }
    }

    #[test]
    fn no_immediate_destination_for_data_ops() {
        let t = InstructionTable::builtin();
        let families = [
            "add", "or", "adc", "sbb", "and", "sub", "xor", "cmp", "test", "mov", "xchg", "lea",
            "imul", "shl", "shr", "sar", "rol", "ror", "movzx", "movsx", "bt", "xadd",
        ];
        for m in families {
            for sig in t.signatures(m).unwrap() {
                if sig.len() == 2 {
                    assert!(!matches!(sig[0], OperandClass::Imm(_) | OperandClass::Rel), "{m}: {sig:?}");
                }
            }
        }
    }

    #[test]
    fn rejects_bad_tables() {
        let bad_class = r#"{"directives":[],"instructions":[{"mnemonic":"mov","signatures":["r99"]}]}"#;
        assert!(matches!(InstructionTable::from_json(bad_class), Err(TableError::UnknownClass { .. })));
        let dup = r#"{"directives":[],"instructions":[{"mnemonic":"nop","signatures":[""]},{"mnemonic":"NOP","signatures":[""]}]}"#;
        assert!(matches!(InstructionTable::from_json(dup), Err(TableError::DuplicateMnemonic(_))));
        let dir = r#"{"directives":["macro"],"instructions":[]}"#;
        assert!(matches!(InstructionTable::from_json(dir), Err(TableError::UnsupportedDirective(_))));
    }
}
