use crate::{
    Cli, Command, EngineSpec, EvaluateArgs, Format, PartitionArg, PreprocessArgs, RenderArgs, SmoothingArg,
    SplitArgs, SplitSource, StatsArgs, TranslateArgs,
};
use anyhow::{bail, Context, Result};
use nl2asm_core::asm::SystemAssembler;
use nl2asm_core::corpus::{compute_stats, split_by_program, split_with_test_programs, Partition, Program};
use nl2asm_core::metrics::{
    aggregate_report, ingest_labels, program_scores, snippet_metrics, Breakdown, LabelSet, ScoringOptions, Smoothing,
};
use nl2asm_core::pipeline::export_partition;
use nl2asm_core::translator::{
    build_index, load_external_predictions, translate_pairs, write_predictions, PreparedPair, Prediction,
};
use nl2asm_core::{load_corpus, Corpus, CorpusSplit, ParserDictionaries};
use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::path::Path;

pub fn run(cli: Cli) -> Result<()> {
    let dicts = cli.dicts;
    match cli.command {
        Command::Stats(args) => stats(args),
        Command::Split(args) => split(args),
        Command::Preprocess(args) => preprocess(args, load_dicts(dicts.as_deref())?),
        Command::Translate(args) => translate(args, load_dicts(dicts.as_deref())?),
        Command::Evaluate(args) => evaluate(args, load_dicts(dicts.as_deref())?),
        Command::Render(args) => render(args),
    }
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if !path.is_file() {
        bail!("{what} `{}` does not exist or is not a file", path.display());
    }
    Ok(())
}

fn load_dicts(path: Option<&Path>) -> Result<ParserDictionaries> {
    match path {
        Some(p) => ParserDictionaries::load(p).with_context(|| format!("loading dictionaries {}", p.display())),
        None => Ok(ParserDictionaries::builtin()),
    }
}

fn load(path: &Path) -> Result<Corpus> {
    require_file(path, "corpus")?;
    load_corpus(path).with_context(|| format!("loading corpus {}", path.display()))
}

fn ratios3(values: &[f64]) -> Result<[f64; 3]> {
    <[f64; 3]>::try_from(values).map_err(|_| anyhow::anyhow!("expected three ratios, got {}", values.len()))
}

fn resolve_split(source: &SplitSource, corpus: &Corpus) -> Result<CorpusSplit> {
    let split = match &source.split {
        Some(path) => {
            require_file(path, "split file")?;
            CorpusSplit::load(path)?
        }
        None => {
            let ratios = ratios3(source.ratios.as_deref().unwrap_or(&[0.8, 0.1, 0.1]))?;
            split_by_program(corpus, ratios, source.seed.unwrap_or(42))?
        }
    };
    split.check(corpus)?;
    Ok(split)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn stats(args: StatsArgs) -> Result<()> {
    let corpus = load(&args.corpus)?;
    let stats = compute_stats(&corpus)?;
    let text = match args.format {
        Format::Text => stats.render_table(),
        Format::Json => serde_json::to_string_pretty(&stats)? + "\n",
    };
    write_output(args.output.as_deref(), &text)
}

fn split(args: SplitArgs) -> Result<()> {
    let corpus = load(&args.corpus)?;
    let ratios = ratios3(&args.ratios)?;
    let split = match &args.test_programs {
        Some(path) => {
            require_file(path, "test program list")?;
            let ids: BTreeSet<String> = std::fs::read_to_string(path)?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect();
            split_with_test_programs(&corpus, &ids, [ratios[0], ratios[1]], args.seed)?
        }
        None => split_by_program(&corpus, ratios, args.seed)?,
    };
    split.save(&args.output)?;
    let counts = split.pair_counts(&corpus);
    eprintln!(
        "programs train/dev/test: {}/{}/{}  pairs: {}/{}/{}",
        split.train.len(),
        split.dev.len(),
        split.test.len(),
        counts[0],
        counts[1],
        counts[2]
    );
    Ok(())
}

fn partition_programs<'a>(corpus: &'a Corpus, split: &CorpusSplit, part: Partition) -> Vec<&'a Program> {
    corpus
        .programs
        .iter()
        .filter(|p| split.partition_of(&p.program_id) == Some(part))
        .collect()
}

fn preprocess(args: PreprocessArgs, dicts: ParserDictionaries) -> Result<()> {
    let corpus = load(&args.corpus)?;
    let split = resolve_split(&args.split, &corpus)?;
    std::fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    for (part, name) in [(Partition::Train, "train"), (Partition::Dev, "dev"), (Partition::Test, "test")] {
        let programs = partition_programs(&corpus, &split, part);
        let pairs = programs.iter().flat_map(|p| p.pairs.iter());
        export_partition(pairs, &dicts, &args.out_dir, name)?;
    }
    Ok(())
}

fn prepared(corpus: &Corpus, split: &CorpusSplit, part: Partition, dicts: &ParserDictionaries) -> Vec<PreparedPair> {
    let programs = partition_programs(corpus, split, part);
    PreparedPair::prepare_all(programs.iter().flat_map(|p| p.pairs.iter()), dicts)
}

fn engine_predictions(
    engine: &EngineSpec,
    corpus: &Corpus,
    split: &CorpusSplit,
    targets: &[PreparedPair],
    dicts: &ParserDictionaries,
) -> Result<(Vec<Prediction>, Vec<String>)> {
    match engine {
        EngineSpec::Baseline => {
            let train = prepared(corpus, split, Partition::Train, dicts);
            let index = build_index(train.iter().map(|p| (p.pair.pair_id.as_str(), &p.standardized)))
                .context("building the baseline index from the training partition")?;
            Ok((translate_pairs(&index, targets), Vec::new()))
        }
        EngineSpec::External(path) => {
            let loaded = load_external_predictions(path, targets)?;
            Ok((loaded.predictions, loaded.diagnostics))
        }
    }
}

fn write_predictions_file(path: &Path, predictions: &[Prediction]) -> Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_predictions(predictions, std::io::BufWriter::new(file))?;
    Ok(())
}

fn check_engine_path(engine: &EngineSpec) -> Result<()> {
    if let EngineSpec::External(path) = engine {
        require_file(path, "predictions file")?;
    }
    Ok(())
}

fn translate(args: TranslateArgs, dicts: ParserDictionaries) -> Result<()> {
    check_engine_path(&args.engine)?;
    let corpus = load(&args.corpus)?;
    let split = resolve_split(&args.split, &corpus)?;
    let part = match args.partition {
        PartitionArg::Train => Partition::Train,
        PartitionArg::Dev => Partition::Dev,
        PartitionArg::Test => Partition::Test,
    };
    let targets = prepared(&corpus, &split, part, &dicts);
    let (predictions, diagnostics) = engine_predictions(&args.engine, &corpus, &split, &targets, &dicts)?;
    for d in &diagnostics {
        eprintln!("warning: {d}");
    }
    write_predictions_file(&args.output, &predictions)
}

fn evaluate(args: EvaluateArgs, dicts: ParserDictionaries) -> Result<()> {
    check_engine_path(&args.engine)?;
    if let Some(p) = &args.labels {
        require_file(p, "labels file")?;
    }
    let assembler = args
        .use_system_assembler
        .as_deref()
        .map(SystemAssembler::new)
        .transpose()?;
    let corpus = load(&args.corpus)?;
    let split = resolve_split(&args.split, &corpus)?;
    let programs: Vec<Program> = partition_programs(&corpus, &split, Partition::Test)
        .into_iter()
        .cloned()
        .collect();
    if programs.is_empty() {
        bail!("the test partition is empty");
    }
    let targets = prepared(&corpus, &split, Partition::Test, &dicts);
    let (predictions, mut diagnostics) = engine_predictions(&args.engine, &corpus, &split, &targets, &dicts)?;
    if let Some(path) = &args.predictions_out {
        write_predictions_file(path, &predictions)?;
    }
    let ids: Vec<&str> = targets.iter().map(|p| p.pair.pair_id.as_str()).collect();
    let labels = match &args.labels {
        Some(path) => ingest_labels(path, &ids)?,
        None => LabelSet::default(),
    };
    let evaluation = program_scores(
        &programs,
        &predictions,
        &labels,
        ScoringOptions {
            assembler: assembler.as_ref(),
        },
    )?;
    let by_id: HashMap<&str, &Prediction> = predictions.iter().map(|p| (p.pair_id.as_str(), p)).collect();
    let references: HashMap<&str, &str> = targets
        .iter()
        .map(|p| (p.pair.pair_id.as_str(), p.pair.snippet.as_str()))
        .collect();
    let preds: Vec<&str> = evaluation
        .outcomes
        .iter()
        .map(|o| by_id.get(o.pair_id.as_str()).map_or("", |p| p.final_text()))
        .collect();
    let refs: Vec<&str> = evaluation.outcomes.iter().map(|o| references[o.pair_id.as_str()]).collect();
    let mut snippet = snippet_metrics(&preds, &refs, &evaluation.outcomes, args.sentence_bleu)?;
    let mut breakdown = Breakdown::compute(&preds, &refs, &evaluation.outcomes, args.sentence_bleu)?;
    let headline = match args.smoothing {
        SmoothingArg::AddOne => Smoothing::AddOne,
        SmoothingArg::None => Smoothing::None,
    };
    snippet.bleu.headline = headline;
    for m in [&mut breakdown.single_line, &mut breakdown.multi_line].into_iter().flatten() {
        m.bleu.headline = headline;
    }
    let mut report = aggregate_report(&evaluation.scores, Some(snippet), Some(breakdown))?;
    report.unlabeled_unknown = evaluation.unlabeled_unknown;
    report.label_conflicts = labels.conflicts.len();
    diagnostics.extend(evaluation.diagnostics);
    diagnostics.extend(labels.conflicts.iter().map(|c| {
        format!(
            "annotators disagree on `{}` ({} correct, {} incorrect); resolved as {:?}",
            c.pair_id, c.correct_votes, c.incorrect_votes, c.resolved
        )
    }));
    report.diagnostics = diagnostics;
    for d in &report.diagnostics {
        eprintln!("note: {d}");
    }
    let text = match args.format {
        Format::Json => report.to_json()? + "\n",
        Format::Text => report.render_text(),
    };
    write_output(args.output.as_deref(), &text)
}

fn render(args: RenderArgs) -> Result<()> {
    require_file(&args.report, "report")?;
    let text = std::fs::read_to_string(&args.report)?;
    let report = nl2asm_core::metrics::EvaluationReport::from_json(&text)
        .with_context(|| format!("parsing report {}", args.report.display()))?;
    let out = match args.format {
        Format::Text => report.render_text(),
        Format::Json => report.to_json()? + "\n",
    };
    write_output(None, &out)
}
