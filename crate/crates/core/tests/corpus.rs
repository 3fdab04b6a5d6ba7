use nl2asm_core::corpus::{compute_stats, read_corpus, split_by_program, write_corpus, Partition};
use nl2asm_core::pipeline::{export_partition, PreprocessedRecord};
use nl2asm_core::{load_corpus, CorpusSplit, ParserDictionaries};
use std::path::{Path, PathBuf};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn single_program_fixture_shape() {
    let corpus = load_corpus(&fixture("program_48703.jsonl")).unwrap();
    assert_eq!(corpus.programs.len(), 1);
    let program = &corpus.programs[0];
    assert_eq!(program.pairs.len(), 24);
    assert_eq!(program.n_t, 33);
    assert_eq!(program.pairs.iter().filter(|p| p.is_multi_line()).count(), 7);
    let stats = compute_stats(&corpus).unwrap();
    assert_eq!(stats.pair_count, 24);
    assert_eq!(stats.multi_line_count, 7);
    assert!(stats.snippet.min_tokens >= 1);
}

#[test]
fn corpus_write_read_round_trip() {
    let corpus = load_corpus(&fixture("sample_corpus.jsonl")).unwrap();
    let mut buf = Vec::new();
    write_corpus(&corpus, &mut buf).unwrap();
    assert_eq!(read_corpus(buf.as_slice()).unwrap(), corpus);
}

#[test]
fn split_is_deterministic_and_program_disjoint() {
    let corpus = load_corpus(&fixture("sample_corpus.jsonl")).unwrap();
    let a = split_by_program(&corpus, [0.6, 0.2, 0.2], 3).unwrap();
    let b = split_by_program(&corpus, [0.6, 0.2, 0.2], 3).unwrap();
    assert_eq!(a, b);
    a.check(&corpus).unwrap();
    for p in &corpus.programs {
        let hits = [Partition::Train, Partition::Dev, Partition::Test]
            .iter()
            .filter(|&&part| a.programs(part).contains(&p.program_id))
            .count();
        assert_eq!(hits, 1, "{}", p.program_id);
    }
    assert_eq!(a.pair_counts(&corpus).iter().sum::<usize>(), corpus.pair_count());
    let back = CorpusSplit::from_json(&a.to_json()).unwrap();
    assert_eq!(back, a);
    assert!(split_by_program(&corpus, [1.0, 0.0, 0.0], 3).is_err());
}

#[test]
fn exports_line_up() {
    let corpus = load_corpus(&fixture("program_48703.jsonl")).unwrap();
    let dicts = ParserDictionaries::builtin();
    let dir = tempfile::tempdir().unwrap();
    let [jsonl, intent, snippet] = export_partition(corpus.pairs(), &dicts, dir.path(), "test").unwrap();
    let records: Vec<PreprocessedRecord> = std::fs::read_to_string(&jsonl)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let intents: Vec<String> = std::fs::read_to_string(&intent).unwrap().lines().map(String::from).collect();
    let snippets: Vec<String> = std::fs::read_to_string(&snippet).unwrap().lines().map(String::from).collect();
    assert_eq!(records.len(), 24);
    assert_eq!(intents.len(), 24);
    assert_eq!(snippets.len(), 24);
    for ((r, i), s) in records.iter().zip(&intents).zip(&snippets) {
        assert_eq!(&r.std_intent, i);
        assert_eq!(&r.std_snippet, s);
    }
}
