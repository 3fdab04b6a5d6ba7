use nl2asm_core::corpus::{Program, SnippetIntentPair};
use nl2asm_core::metrics::{
    aggregate_report, program_scores, read_labels, FailureType, LabelSet, MetricsError, ScoringOptions, Verdict,
    VerdictSource,
};
use nl2asm_core::{Prediction, SlotMap};
use std::path::Path;

fn pair(program: &str, i: usize, snippet: &str) -> SnippetIntentPair {
    SnippetIntentPair {
        pair_id: format!("{program}-{i:03}"),
        program_id: program.into(),
        line_index: i,
        intent: format!("intent {i}"),
        snippet: snippet.into(),
        source_url: None,
        category: None,
    }
}

fn program(id: &str, pairs: Vec<SnippetIntentPair>) -> Program {
    let n_t = pairs.iter().map(SnippetIntentPair::line_count).sum();
    Program {
        program_id: id.into(),
        category: None,
        pairs,
        n_t,
    }
}

fn predict(pair_id: &str, raw: &str) -> Prediction {
    Prediction::from_raw(pair_id, raw, &SlotMap::new(), "test", None)
}

struct Row {
    id: String,
    n_t: usize,
    n_syn: usize,
    n_sem: usize,
}

fn test_programs() -> Vec<Row> {
    let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/test_programs.tsv")).unwrap();
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            Row {
                id: format!("row{:0>2}", f[0]),
                n_t: f[2].parse().unwrap(),
                n_syn: f[4].parse().unwrap(),
                n_sem: f[5].parse().unwrap(),
            }
        })
        .collect()
}

/// One single-line pair per program line: the first `n_t - n_syn` predictions
/// fail the validator, the next `n_syn - n_sem` assemble but load the wrong
/// constant, the rest are verbatim.
fn synthetic(rows: &[Row]) -> (Vec<Program>, Vec<Prediction>) {
    let mut programs = Vec::new();
    let mut predictions = Vec::new();
    for row in rows {
        let pairs: Vec<SnippetIntentPair> = (0..row.n_t).map(|i| pair(&row.id, i, "or cx, 0xfff")).collect();
        for (i, p) in pairs.iter().enumerate() {
            let raw = if i < row.n_t - row.n_syn {
                "xor 0xfff, cx"
            } else if i < row.n_t - row.n_sem {
                "or cx, 0xffe"
            } else {
                "or cx, 0xfff"
            };
            predictions.push(predict(&p.pair_id, raw));
        }
        programs.push(program(&row.id, pairs));
    }
    (programs, predictions)
}

#[test]
fn synthetic_programs_reproduce_every_row() {
    let rows = test_programs();
    assert_eq!(rows.len(), 30);
    let (programs, predictions) = synthetic(&rows);
    let eval = program_scores(&programs, &predictions, &LabelSet::default(), ScoringOptions::default()).unwrap();
    for (row, score) in rows.iter().zip(&eval.scores) {
        assert_eq!((score.n_t, score.n_syn, score.n_sem), (row.n_t, row.n_syn, row.n_sem), "{}", row.id);
    }
    assert_eq!(eval.unlabeled_unknown, 0);
    let report = aggregate_report(&eval.scores, None, None).unwrap();
    assert_eq!(report.aggregates.fully_correct_count, 16);
    assert!((report.aggregates.mean_syntactic_ratio - 0.98).abs() <= 0.01);
    assert!((report.aggregates.mean_semantic_ratio - 0.96).abs() <= 0.01);
}

#[test]
fn one_bad_line_sinks_the_whole_block() {
    let pairs = vec![
        pair("p", 0, "xor ecx, ecx"),
        pair("p", 1, "push 0x68732f2f\\npush 0x6e69622f\\nmov ebx, esp"),
    ];
    let programs = [program("p", pairs)];
    assert_eq!(programs[0].n_t, 4);
    let predictions = [
        predict("p-000", "xor ecx, ecx"),
        predict("p-001", "push 0x68732f2f\\npush 0x6e69622f\\nmov ebx, bx"),
    ];
    let eval = program_scores(&programs, &predictions, &LabelSet::default(), ScoringOptions::default()).unwrap();
    let s = &eval.scores[0];
    assert_eq!((s.n_t, s.n_syn, s.n_sem), (4, 1, 1));
    assert!(!s.fully_correct);
    assert!(!s.compilable);
    assert!(eval.outcomes[1].multi_line);
    assert_eq!(eval.outcomes[1].lines, 3);
}

#[test]
fn labels_override_rules_and_syntax() {
    let pairs = vec![
        pair("p", 0, "mov eax, 0x1"),
        pair("p", 1, "int 0x80"),
        pair("p", 2, "jmp short decode"),
    ];
    let programs = [program("p", pairs)];
    let predictions = [
        predict("p-000", "mov eax, 0x1"),
        predict("p-001", "int 0x80h"),
        predict("p-002", "jmp foo"),
    ];
    let labels_text = [
        r#"{"pair_id":"p-000","annotator":"a1","verdict":"incorrect","failure_types":["B"]}"#,
        r#"{"pair_id":"p-001","annotator":"a1","verdict":"correct","syntactic_flag":false}"#,
        r#"{"pair_id":"p-001","annotator":"a2","verdict":"correct"}"#,
    ]
    .join("\n");
    let ids = ["p-000", "p-001", "p-002"];
    let labels = read_labels(labels_text.as_bytes(), &ids).unwrap();
    assert_eq!(labels.verdict("p-002"), Verdict::Unlabeled);
    assert!(labels.get("p-000").unwrap().failure_types.contains(&FailureType::B));
    let eval = program_scores(&programs, &predictions, &labels, ScoringOptions::default()).unwrap();
    let o = &eval.outcomes;
    assert_eq!(o[0].source, VerdictSource::Label);
    assert!(o[0].exact && o[0].syntactic && !o[0].semantic);
    // Labelled correct, but the annotator's syntax flag says it does not assemble.
    assert!(!o[1].syntactic && !o[1].semantic);
    assert_eq!(o[2].source, VerdictSource::UnknownPessimistic);
    assert_eq!(eval.unlabeled_unknown, 1);
    assert_eq!(eval.scores[0].n_sem, 0);
    assert!(eval.diagnostics.iter().any(|d| d.contains("p-001")));
}

#[test]
fn conflicting_annotators_are_reported() {
    let text = [
        r#"{"pair_id":"x","annotator":"a1","verdict":"correct"}"#,
        r#"{"pair_id":"x","annotator":"a2","verdict":"incorrect","failure_types":["A"]}"#,
        r#"{"pair_id":"y","annotator":"a1","verdict":"incorrect"}"#,
        r#"{"pair_id":"y","annotator":"a2","verdict":"incorrect"}"#,
        r#"{"pair_id":"y","annotator":"a3","verdict":"correct"}"#,
    ]
    .join("\n");
    let labels = read_labels(text.as_bytes(), &["x", "y"]).unwrap();
    assert_eq!(labels.verdict("x"), Verdict::Unlabeled);
    assert_eq!(labels.verdict("y"), Verdict::Incorrect);
    assert_eq!(labels.conflicts.len(), 2);
}

#[test]
fn bad_label_records_are_rejected() {
    let unknown = r#"{"pair_id":"zz","annotator":"a","verdict":"correct"}"#;
    assert!(matches!(read_labels(unknown.as_bytes(), &["x"]), Err(MetricsError::UnknownPair { line: 1, .. })));
    let types_on_correct = r#"{"pair_id":"x","annotator":"a","verdict":"correct","failure_types":["A"]}"#;
    assert!(matches!(read_labels(types_on_correct.as_bytes(), &["x"]), Err(MetricsError::Malformed { .. })));
    let garbage = "{not json";
    assert!(matches!(read_labels(garbage.as_bytes(), &["x"]), Err(MetricsError::Malformed { .. })));
}

#[test]
fn missing_prediction_counts_against_the_program() {
    let programs = [program("p", vec![pair("p", 0, "int 0x80"), pair("p", 1, "ret")])];
    let predictions = [predict("p-000", "int 0x80")];
    let eval = program_scores(&programs, &predictions, &LabelSet::default(), ScoringOptions::default()).unwrap();
    let s = &eval.scores[0];
    assert_eq!((s.n_t, s.n_syn, s.n_sem), (2, 1, 1));
    assert!(!s.compilable);
    assert_eq!(eval.outcomes[1].source, VerdictSource::Missing);
    assert!(eval.diagnostics.iter().any(|d| d.contains("p-001")));
}
