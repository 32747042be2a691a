//! Command-line front end: `synth`, `encode`, `rank` and `eval`.
//!
//! Exit codes: 0 on success, 2 for unreadable or invalid input, 3 when an
//! embedding lookup fails, 64 for malformed command lines.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde::Serialize;

use crate::dataio::{
    gen_synthetic, load_dataset, read_embeddings, read_mvec, write_jsonl, write_mvec, DatasetFormat,
    DialogueRecord, SynthConfig,
};
use crate::discourse::{DiscourseConfig, IntentMode, DEFAULT_INTENTS, DEFAULT_MAX_TOKENS, DEFAULT_TAU};
use crate::encoder::{Encoder, DEFAULT_K};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, train_lm, EvalReport, LmSummary, DEFAULT_RECALL_KS};
use crate::pipeline::{encode_dataset, encode_record, encoded_from_table, encodings_to_table, rank_encoded, RecordRanking};
use crate::ranker::{Aggregation, RankingConfig};
use crate::spectral::Ridge;
use crate::views::{tokenize, ContextualProvider, DEFAULT_CONTEXTUAL_DIM, DEFAULT_POSITIONAL_DIM};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_MISSING_EMBEDDING: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "dialogue-discourse", version, about = "Discourse-aware response selection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded topical corpus as JSONL.
    Synth(SynthArgs),
    /// Encode every utterance and candidate into an MVEC file.
    Encode(EncodeArgs),
    /// Rank each record's candidates against its discourse tokens.
    Rank(RankArgs),
    /// Score a rankings file against its dataset.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub dialogues: usize,
    #[arg(long, default_value_t = 8)]
    pub topics: usize,
    #[arg(long, default_value_t = 10)]
    pub candidates: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset path (JSONL, or Ubuntu CSV).
    #[arg(long)]
    pub data: PathBuf,
    /// Overrides the format inferred from the file extension.
    #[arg(long, value_parser = parse_format)]
    pub format: Option<DatasetFormat>,
}

impl DataArgs {
    fn format(&self) -> DatasetFormat {
        self.format.unwrap_or_else(|| DatasetFormat::from_path(&self.data))
    }

    fn load(&self) -> Result<Vec<DialogueRecord>> {
        load_dataset(&self.data, self.format())
    }
}

#[derive(Debug, Args)]
#[group(skip)]
pub struct EncoderArgs {
    /// Use the seeded feature-hashing contextual provider.
    #[arg(long)]
    pub hashed: bool,
    /// Contextual vectors from an MVEC (or JSONL) embedding file.
    #[arg(long)]
    pub emb: Option<PathBuf>,
    /// Seed of the hashed provider.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Width of the hashed contextual view.
    #[arg(long, default_value_t = DEFAULT_CONTEXTUAL_DIM)]
    pub dim: usize,
    #[arg(long, default_value_t = DEFAULT_POSITIONAL_DIM)]
    pub positional_dim: usize,
    /// Latent dimension of each utterance representation.
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    /// `auto` or a non-negative number.
    #[arg(long, default_value = "auto")]
    pub ridge: Ridge<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EncoderConfig {
    pub provider: String,
    pub embeddings: Option<PathBuf>,
    pub seed: Option<u64>,
    pub contextual_dim: usize,
    pub positional_dim: usize,
    pub k: usize,
    pub ridge: String,
}

impl EncoderArgs {
    fn build(&self) -> Result<(Encoder<f64>, EncoderConfig)> {
        let provider = match &self.emb {
            Some(path) => ContextualProvider::from_table(read_embeddings(path)?)?,
            None => ContextualProvider::hashed(self.dim, self.seed)?,
        };
        let config = EncoderConfig {
            provider: if self.emb.is_some() { "external-file" } else { "hashed" }.into(),
            embeddings: self.emb.clone(),
            seed: self.emb.is_none().then_some(self.seed),
            contextual_dim: provider.dim(),
            positional_dim: self.positional_dim,
            k: self.k,
            ridge: self.ridge.to_string(),
        };
        let encoder = Encoder::new(provider)
            .with_k(self.k)
            .with_ridge(self.ridge)
            .with_positional_dim(self.positional_dim);
        Ok((encoder, config))
    }
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("provider").required(true).multiple(false).args(["hashed", "emb"])))]
pub struct EncodeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub encoder: EncoderArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("provider").required(true).multiple(false).args(["hashed", "emb"])))]
pub struct RankArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub encoder: EncoderArgs,
    /// Reuse encodings written by `encode` instead of recomputing them.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Intents requested per context step.
    #[arg(long, default_value_t = DEFAULT_INTENTS)]
    pub intents: usize,
    /// Cosine threshold above which an intent counts as a duplicate.
    #[arg(long, default_value_t = DEFAULT_TAU)]
    pub tau: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_TOKENS)]
    pub max_tokens: usize,
    /// Evict the oldest discourse tokens when the store is full.
    #[arg(long)]
    pub evict_oldest: bool,
    #[arg(long, default_value = "average")]
    pub intent_mode: IntentMode,
    #[arg(long, default_value = "mean")]
    pub aggregation: Aggregation,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub rankings: PathBuf,
    /// Recall cutoffs.
    #[arg(long = "k", value_delimiter = ',', default_values_t = DEFAULT_RECALL_KS)]
    pub ks: Vec<usize>,
    /// Add-alpha smoothing of the bigram language model.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Dataset whose ground-truth responses train the language model;
    /// defaults to the evaluated dataset.
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Markdown report path; defaults to `--out` with an `md` extension.
    #[arg(long)]
    pub markdown: Option<PathBuf>,
}

fn parse_format(s: &str) -> std::result::Result<DatasetFormat, String> {
    match s {
        "jsonl" => Ok(DatasetFormat::Jsonl),
        "ubuntu-csv" | "csv" => Ok(DatasetFormat::UbuntuCsv),
        _ => Err(format!("unknown dataset format `{s}` (jsonl, ubuntu-csv)")),
    }
}

/// Maps a library error onto the process exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::MissingEmbedding { .. } => EXIT_MISSING_EMBEDDING,
        _ => EXIT_INPUT,
    }
}

/// Parses `args` (program name first) and runs the command, reporting
/// failures on stderr. Returns the exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(command: &Command) -> Result<()> {
    match command {
        Command::Synth(a) => cmd_synth(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Rank(a) => cmd_rank(a),
        Command::Eval(a) => cmd_eval(a),
    }
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        seed: args.seed,
        n_dialogues: args.dialogues,
        n_topics: args.topics,
        candidates_per_record: args.candidates,
        ..SynthConfig::default()
    };
    write_jsonl(&gen_synthetic(&cfg)?, &args.out)
}

pub fn cmd_encode(args: &EncodeArgs) -> Result<()> {
    let records = args.data.load()?;
    let (encoder, _) = args.encoder.build()?;
    let encoded = encode_dataset(&records, &encoder)?;
    write_mvec(&encodings_to_table(&encoded, encoder.k)?, &args.out)
}

#[derive(Debug, Serialize)]
struct RankConfig<'a> {
    encoder: &'a EncoderConfig,
    cache: Option<&'a Path>,
    intents: usize,
    tau: f64,
    max_tokens: usize,
    evict_oldest: bool,
    intent_mode: IntentMode,
    aggregation: Aggregation,
}

pub fn cmd_rank(args: &RankArgs) -> Result<()> {
    use rayon::prelude::*;

    let records = args.data.load()?;
    let (encoder, encoder_config) = args.encoder.build()?;
    let discourse = DiscourseConfig {
        intents: args.intents,
        tau: args.tau,
        ridge: args.encoder.ridge,
        max_tokens: args.max_tokens,
        evict_oldest: args.evict_oldest,
        mode: args.intent_mode,
    };
    let ranking = RankingConfig {
        token_aggregation: args.aggregation,
    };
    let cache = args.cache.as_ref().map(read_mvec).transpose()?;
    if let Some(table) = &cache {
        if table.dim() != encoder.k {
            return Err(Error::Invalid(format!(
                "cache holds {}-dimensional encodings but k = {}",
                table.dim(),
                encoder.k
            )));
        }
    }

    let rankings: Vec<RecordRanking> = records
        .par_iter()
        .map(|r| {
            let encoded = match &cache {
                Some(table) => encoded_from_table(r, table)?,
                None => encode_record(r, &encoder)?.to_storage_precision()?,
            };
            rank_encoded(&encoded, &discourse, &ranking)
        })
        .collect::<Result<_>>()?;
    write_jsonl(&rankings, &args.out)?;

    let config = RankConfig {
        encoder: &encoder_config,
        cache: args.cache.as_deref(),
        intents: args.intents,
        tau: args.tau,
        max_tokens: args.max_tokens,
        evict_oldest: args.evict_oldest,
        intent_mode: args.intent_mode,
        aggregation: args.aggregation,
    };
    write_json(&config, &sidecar_path(&args.out))
}

/// `rankings.jsonl` -> `rankings.config.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("config.json")
}

#[derive(Debug, Serialize)]
struct EvalConfig {
    data: PathBuf,
    format: DatasetFormat,
    rankings: PathBuf,
    ks: Vec<usize>,
    lm_train: PathBuf,
    lm: LmSummary,
    /// Configuration written next to the rankings by `rank`, if present.
    rank: Option<serde_json::Value>,
}

#[derive(Debug, Serialize)]
struct EvalOutput<'a> {
    config: EvalConfig,
    #[serde(flatten)]
    report: &'a EvalReport,
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let records = args.data.load()?;
    let rankings = read_rankings(&args.rankings)?;

    let (train_path, train_records) = match &args.train {
        Some(path) => (path.clone(), load_dataset(path, DatasetFormat::from_path(path))?),
        None => (args.data.data.clone(), records.clone()),
    };
    let corpus: Vec<Vec<String>> = train_records.iter().map(|r| tokenize(r.positive())).collect();
    let lm = train_lm(&corpus, args.alpha)?;
    let report = evaluate(&rankings, &records, &lm, &args.ks)?;

    let rank = match fs::read_to_string(sidecar_path(&args.rankings)) {
        Ok(text) => Some(serde_json::from_str(&text).map_err(|e| Error::Invalid(e.to_string()))?),
        Err(_) => None,
    };
    let output = EvalOutput {
        config: EvalConfig {
            data: args.data.data.clone(),
            format: args.data.format(),
            rankings: args.rankings.clone(),
            ks: args.ks.clone(),
            lm_train: train_path,
            lm: lm.summary(),
            rank,
        },
        report: &report,
    };
    write_json(&output, &args.out)?;
    let md_path = args.markdown.clone().unwrap_or_else(|| args.out.with_extension("md"));
    fs::write(&md_path, report.to_markdown()).map_err(|e| Error::io(&md_path, e))
}

pub fn read_rankings(path: &Path) -> Result<Vec<RecordRanking>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                cause: e.to_string(),
            })
        })
        .collect()
}

fn write_json<S: Serialize>(value: &S, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Invalid(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
