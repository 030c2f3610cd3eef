use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use hallrate::estimator::EvalSource;
use hallrate::stats::{GroupBy, TtestVariant};
use hallrate::{Task, TokenizerMode};
use serde::Serialize;

use crate::UsageError;

/// Generation seeds used for every model in the reference protocol.
pub const DEFAULT_SEEDS: [u64; 5] = [42, 43, 44, 47, 49];

#[derive(Debug, Parser, Serialize)]
#[command(name = "hallrate", version, about = "Detector-corrected hallucination rate estimation")]
pub struct Cli {
    /// Generation seeds to keep and record (comma separated).
    #[arg(long, global = true, value_delimiter = ',', default_values_t = DEFAULT_SEEDS)]
    pub seeds: Vec<u64>,

    /// Restrict processing to these languages (comma separated; all if omitted).
    #[arg(long = "lang", global = true, value_delimiter = ',')]
    pub langs: Vec<String>,

    /// Debug logging.
    #[arg(short, long, global = true)]
    #[serde(skip)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    pub fn wants_lang(&self, language: &str) -> bool {
        self.langs.is_empty() || self.langs.iter().any(|l| l == language)
    }

    /// Rejects missing input files before any work starts.
    pub fn check_paths(&self) -> Result<(), UsageError> {
        for p in self.command.inputs() {
            if !p.is_file() {
                return Err(UsageError(format!("input file `{}` does not exist", p.display())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Parse tagged answers into offset-based span annotations.
    Parse(ParseArgs),
    /// Project span annotations onto tokens.
    Project(ProjectArgs),
    /// Score predicted token labels against gold labels.
    Score(ScoreArgs),
    /// Pairwise inter-annotator agreement.
    Iaa(IaaArgs),
    /// Screen annotators against silver labels and choose one per language.
    Adjudicate(AdjudicateArgs),
    /// Inject hallucinations into clean answers.
    Inject(InjectArgs),
    /// Simulate a noisy detector over gold labels.
    Simulate(SimulateArgs),
    /// Count detections into detection-run records.
    Count(CountArgs),
    /// Correct detected counts by precision and recall and aggregate them.
    Estimate(EstimateArgs),
    /// Correlation, t-test and mixed-model analyses.
    Analyze(AnalyzeArgs),
    /// Keep articles that are long and deep enough.
    Filter(FilterArgs),
    /// End-to-end recovery experiment on a synthetic corpus.
    Validate(ValidateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Parse(_) => "parse",
            Command::Project(_) => "project",
            Command::Score(_) => "score",
            Command::Iaa(_) => "iaa",
            Command::Adjudicate(_) => "adjudicate",
            Command::Inject(_) => "inject",
            Command::Simulate(_) => "simulate",
            Command::Count(_) => "count",
            Command::Estimate(_) => "estimate",
            Command::Analyze(_) => "analyze",
            Command::Filter(_) => "filter",
            Command::Validate(_) => "validate",
        }
    }

    fn inputs(&self) -> Vec<&Path> {
        let mut v: Vec<&Path> = Vec::new();
        match self {
            Command::Parse(a) => v.push(&a.io.input),
            Command::Project(a) => v.push(&a.io.input),
            Command::Score(a) => v.extend([a.gold.as_path(), a.pred.as_path()]),
            Command::Iaa(a) => v.push(&a.io.input),
            Command::Adjudicate(a) => v.extend([a.io.input.as_path(), a.silver.as_path()]),
            Command::Inject(a) => {
                v.push(&a.io.input);
                v.extend(a.gazetteer.as_deref());
                v.extend(a.negations.as_deref());
            }
            Command::Simulate(a) => v.push(&a.io.input),
            Command::Count(a) => v.push(&a.io.input),
            Command::Estimate(a) => v.extend([a.io.input.as_path(), a.perf.as_path()]),
            Command::Analyze(a) => v.push(a.kind.input()),
            Command::Filter(a) => v.push(&a.io.input),
            Command::Validate(_) => {}
        }
        v
    }
}

#[derive(Debug, Args, Serialize)]
pub struct IoArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ParseArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Also write per-language span counts by type (CSV).
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ProjectArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[arg(long, default_value_t = Task::Binary)]
    pub task: Task,
    /// Default tokenizer.
    #[arg(long, default_value_t = TokenizerMode::Whitespace)]
    pub tokenizer: TokenizerMode,
    /// Per-language tokenizer override, e.g. `zh=per_codepoint` (repeatable).
    #[arg(long = "lang-tokenizer", value_parser = parse_lang_tokenizer)]
    pub lang_tokenizer: Vec<(String, TokenizerMode)>,
}

fn parse_lang_tokenizer(s: &str) -> Result<(String, TokenizerMode), String> {
    let (lang, mode) = s
        .split_once('=')
        .ok_or_else(|| format!("expected LANG=MODE, got `{s}`"))?;
    Ok((lang.to_string(), mode.parse()?))
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreArgs {
    /// Gold token labels (JSONL).
    #[arg(long)]
    pub gold: PathBuf,
    /// Predicted token labels (JSONL), matched to gold by id.
    #[arg(long)]
    pub pred: PathBuf,
    /// Score table (CSV).
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long, default_value_t = Task::Binary)]
    pub task: Task,
    /// Which evaluation set the gold labels are.
    #[arg(long, default_value_t = EvalSource::Gold)]
    pub source: EvalSource,
    /// Also write detector performance records (JSONL) for `estimate`.
    #[arg(long)]
    pub perf_output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct IaaArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[arg(long, default_value_t = Task::Binary)]
    pub task: Task,
}

#[derive(Debug, Args, Serialize)]
pub struct AdjudicateArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Silver labels (JSONL) every annotator is compared with.
    #[arg(long)]
    pub silver: PathBuf,
    /// Minimum observed agreement with silver.
    #[arg(long, default_value_t = 0.40)]
    pub threshold: f64,
    #[arg(long, default_value_t = Task::Binary)]
    pub task: Task,
    /// Also write the chosen annotator's labels per language (JSONL).
    #[arg(long)]
    pub gold_output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct InjectArgs {
    /// Clean answers: `{id, language, text, reference?}` per line.
    #[command(flatten)]
    pub io: IoArgs,
    /// Expected spans per document, e.g. `ENT=1,REL=0.5` (types ENT REL INV CON UNV SUB).
    #[arg(long, value_delimiter = ',', value_parser = parse_intensity)]
    pub intensity: Vec<(hallrate::HallucinationType, f64)>,
    /// Entity substitutions, `surface<TAB>replacement` per line.
    #[arg(long)]
    pub gazetteer: Option<PathBuf>,
    /// Relation negations, `surface<TAB>replacement` per line.
    #[arg(long)]
    pub negations: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

fn parse_intensity(s: &str) -> Result<(hallrate::HallucinationType, f64), String> {
    let (t, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected TYPE=VALUE, got `{s}`"))?;
    let v: f64 = v.parse().map_err(|e| format!("`{v}`: {e}"))?;
    Ok((t.parse()?, v))
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Probability of flagging a clean token.
    #[arg(long = "fp", default_value_t = 0.05)]
    pub fp_rate: f64,
    /// Probability of missing a hallucinated token.
    #[arg(long = "fn", default_value_t = 0.25)]
    pub fn_rate: f64,
    /// Detector noise seed.
    #[arg(long = "noise-seed", default_value_t = 0)]
    pub noise_seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct CountArgs {
    /// Detector token labels (JSONL).
    #[command(flatten)]
    pub io: IoArgs,
    #[arg(long)]
    pub model: String,
    /// Generation seed of the responses.
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = "detector")]
    pub detector_instance: String,
    /// Append to the output instead of replacing it.
    #[arg(long)]
    pub append: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    /// Detection runs (JSONL); output is the language x model matrix (CSV).
    #[command(flatten)]
    pub io: IoArgs,
    /// Detector performance records (JSONL).
    #[arg(long)]
    pub perf: PathBuf,
    #[arg(long, default_value_t = Task::Binary)]
    pub task: Task,
    /// Use only performance measured on this set (gold preferred otherwise).
    #[arg(long)]
    pub source: Option<EvalSource>,
    /// Per-run and aggregated estimates (JSON).
    #[arg(long)]
    pub estimates_output: Option<PathBuf>,
    /// Heatmap of mean rates (SVG).
    #[arg(long)]
    pub heatmap: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct FilterArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[arg(long, default_value_t = 2000)]
    pub min_len: usize,
    #[arg(long, default_value_t = 5.0)]
    pub min_depth: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    /// True token hallucination rate.
    #[arg(long, default_value_t = 0.12)]
    pub q: f64,
    #[arg(long = "fp", default_value_t = 0.05)]
    pub fp_rate: f64,
    #[arg(long = "fn", default_value_t = 0.25)]
    pub fn_rate: f64,
    #[arg(long, default_value_t = 500)]
    pub docs: usize,
    /// Leading documents used to measure precision and recall.
    #[arg(long, default_value_t = 100)]
    pub silver_docs: usize,
    #[arg(long, default_value_t = 200)]
    pub tokens_per_doc: usize,
    /// Report (JSON); printed only when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    #[command(subcommand)]
    pub kind: AnalyzeKind,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyzeKind {
    /// Pearson correlation between two numeric CSV columns.
    Corr(CorrArgs),
    /// Two-sample t-test of a numeric column split by a two-level column.
    Ttest(TtestArgs),
    /// Random-intercept mixed models with and without interactions, and their LR test.
    Lmm(LmmArgs),
}

impl AnalyzeKind {
    pub fn input(&self) -> &Path {
        match self {
            AnalyzeKind::Corr(a) => &a.io.input,
            AnalyzeKind::Ttest(a) => &a.io.input,
            AnalyzeKind::Lmm(a) => &a.io.input,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct CorrArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub y: String,
    /// Scatter plot (SVG).
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TtestArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Numeric column to compare.
    #[arg(long)]
    pub value: String,
    /// Column with exactly two distinct values.
    #[arg(long)]
    pub group: String,
    #[arg(long, default_value_t = TtestVariant::Pooled)]
    pub variant: TtestVariant,
}

#[derive(Debug, Args, Serialize)]
pub struct LmmArgs {
    /// Analysis frame (CSV).
    #[command(flatten)]
    pub io: IoArgs,
    #[arg(long, default_value_t = GroupBy::Language)]
    pub group_by: GroupBy,
    /// Interaction chart of predicted rates (SVG).
    #[arg(long)]
    pub plot: Option<PathBuf>,
}
