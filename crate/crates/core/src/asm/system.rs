//! Differential check against an external NASM-compatible assembler.

use super::ProgramCheck;
use crate::snippet;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::process::Command;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AssemblerError {
    #[error("assembler `{path}` is not an executable file")]
    NotFound { path: String },
    #[error("failed to run `{path}`: {source}")]
    Spawn {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to stage the program: {0}")]
    Staging(#[from] std::io::Error),
}

/// Outcome of assembling one program with the external tool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemVerdict {
    pub accepted: bool,
    pub stderr: String,
}

impl SystemVerdict {
    /// Message describing a disagreement with the internal verdict, if any.
    pub fn disagreement(&self, internal: &ProgramCheck) -> Option<String> {
        if self.accepted == internal.compilable {
            return None;
        }
        Some(format!(
            "internal validator says {}, system assembler says {}{}",
            if internal.compilable { "compilable" } else { "not compilable" },
            if self.accepted { "compilable" } else { "not compilable" },
            if self.stderr.trim().is_empty() {
                String::new()
            } else {
                format!(": {}", self.stderr.trim())
            }
        ))
    }
}

/// Runs `<path> -f elf32 <file> -o <out>`; exit status 0 means compilable.
#[derive(Debug, Clone)]
pub struct SystemAssembler {
    path: PathBuf,
}

impl SystemAssembler {
    pub fn new(path: &Path) -> Result<Self, AssemblerError> {
        if !path.is_file() {
            return Err(AssemblerError::NotFound {
                path: path.display().to_string(),
            });
        }
        Ok(SystemAssembler { path: path.to_path_buf() })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn assemble<S: AsRef<str>>(&self, snippets: &[S]) -> Result<SystemVerdict, AssemblerError> {
        let dir = tempfile::tempdir()?;
        let source = dir.path().join("program.asm");
        let object = dir.path().join("program.o");
        let mut text = String::new();
        for s in snippets {
            for line in snippet::physical_lines(s.as_ref()) {
                text.push_str(line);
                text.push('\n');
            }
        }
        std::fs::write(&source, text)?;
        let output = Command::new(&self.path)
            .arg("-f")
            .arg("elf32")
            .arg(&source)
            .arg("-o")
            .arg(&object)
            .output()
            .map_err(|source| AssemblerError::Spawn {
                path: self.path.display().to_string(),
                source,
            })?;
        Ok(SystemVerdict {
            accepted: output.status.success(),
            stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
        })
    }
}
