use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

mod commands;

#[derive(Debug, Parser)]
#[command(name = "nl2asm", version, about = "Natural-language to IA-32 assembly toolkit")]
struct Cli {
    /// Parser dictionaries (stopwords, keywords, recognizer rules).
    #[arg(long, global = true, env = "NL2ASM_DICTIONARIES")]
    dicts: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Corpus statistics in the shape of a per-language summary table.
    Stats(StatsArgs),
    /// Program-level train/dev/test split.
    Split(SplitArgs),
    /// Standardized exports for external model training.
    Preprocess(PreprocessArgs),
    /// Run an engine over a partition and write predictions.
    Translate(TranslateArgs),
    /// Score predictions and write an evaluation report.
    Evaluate(EvaluateArgs),
    /// Render a saved evaluation report.
    Render(RenderArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SmoothingArg {
    AddOne,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PartitionArg {
    Train,
    Dev,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum EngineSpec {
    Baseline,
    External(PathBuf),
}

fn parse_engine(s: &str) -> Result<EngineSpec, String> {
    match s.split_once(':') {
        None if s == "baseline" => Ok(EngineSpec::Baseline),
        Some(("external", path)) if !path.is_empty() => Ok(EngineSpec::External(PathBuf::from(path))),
        _ => Err(format!("unknown engine `{s}`; expected `baseline` or `external:<path>`")),
    }
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Train, dev and test pair proportions.
    #[arg(long, value_delimiter = ',', default_values_t = [0.8, 0.1, 0.1])]
    ratios: Vec<f64>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// File with one test program id per line; fixes the test partition.
    #[arg(long)]
    test_programs: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
}

/// Either a saved split or ratios and a seed to compute one.
#[derive(Debug, Args)]
struct SplitSource {
    #[arg(long, conflicts_with_all = ["ratios", "seed"])]
    split: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct PreprocessArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    split: SplitSource,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct TranslateArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    split: SplitSource,
    /// `baseline` or `external:<predictions.jsonl>`.
    #[arg(long, value_parser = parse_engine)]
    engine: EngineSpec,
    #[arg(long, value_enum, default_value = "test")]
    partition: PartitionArg,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    split: SplitSource,
    /// `baseline` or `external:<predictions.jsonl>`.
    #[arg(long, value_parser = parse_engine)]
    engine: EngineSpec,
    /// Semantic labels as JSON Lines.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Cross-check program compilability with this assembler binary.
    #[arg(long)]
    use_system_assembler: Option<PathBuf>,
    /// BLEU figure the report leads with; both are always computed.
    #[arg(long, value_enum, default_value = "add-one")]
    smoothing: SmoothingArg,
    /// Also report sentence-averaged BLEU.
    #[arg(long)]
    sentence_bleu: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Report destination; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Where to write the post-processed predictions.
    #[arg(long)]
    predictions_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[arg(long)]
    report: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}
