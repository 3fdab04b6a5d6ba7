//! Standardized exports consumed by external model trainers.
//!
//! For each partition three aligned files are written: `<name>.jsonl` with
//! full records, and `<name>.intent` / `<name>.snippet` holding one
//! standardized sequence per line. Snippet lines keep the `\n` separator token.

use super::{standardize_pair, ParserDictionaries, SlotMap};
use crate::corpus::SnippetIntentPair;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessedRecord {
    pub pair_id: String,
    pub program_id: String,
    pub std_intent: String,
    pub std_snippet: String,
    pub slot_map: SlotMap,
}

impl PreprocessedRecord {
    pub fn new(pair: &SnippetIntentPair, dicts: &ParserDictionaries) -> Self {
        let std = standardize_pair(pair, dicts);
        PreprocessedRecord {
            pair_id: pair.pair_id.clone(),
            program_id: pair.program_id.clone(),
            std_intent: std.std_intent.joined(),
            std_snippet: std.std_snippet.joined(),
            slot_map: std.slot_map,
        }
    }
}

/// Writes the three aligned files for one partition and returns their paths.
pub fn export_partition<'a>(
    pairs: impl IntoIterator<Item = &'a SnippetIntentPair>,
    dicts: &ParserDictionaries,
    dir: &Path,
    name: &str,
) -> std::io::Result<[PathBuf; 3]> {
    let paths = [
        dir.join(format!("{name}.jsonl")),
        dir.join(format!("{name}.intent")),
        dir.join(format!("{name}.snippet")),
    ];
    let open = |p: &PathBuf| std::fs::File::create(p).map(std::io::BufWriter::new);
    let (mut records, mut intents, mut snippets) = (open(&paths[0])?, open(&paths[1])?, open(&paths[2])?);
    for pair in pairs {
        let rec = PreprocessedRecord::new(pair, dicts);
        serde_json::to_writer(&mut records, &rec)?;
        records.write_all(b"\n")?;
        writeln!(intents, "{}", rec.std_intent)?;
        writeln!(snippets, "{}", rec.std_snippet)?;
    }
    records.flush()?;
    intents.flush()?;
    snippets.flush()?;
    Ok(paths)
}
